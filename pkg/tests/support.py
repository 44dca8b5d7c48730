"""Shared checkers for the property and acceptance suites."""

import random
from typing import Dict, Iterable, List

from linsub.reduction import (
    SUBSTITUTION,
    Policy,
    ReductionStep,
    RuleLabel,
    all_redexes,
    apply_step,
    head_ls_redex,
    normalize,
    unfold,
)
from linsub.terms import Abs, App, Name, Sub, Term, Var, alpha_key, box_subterms


def one_step_reducts(t: Term, rules) -> List[Term]:
    return [apply_step(t, s) for s in all_redexes(t, rules)]


def diamond_failures(terms: Iterable[Term], rules) -> tuple:
    """Count terms with two α-distinct one-step reducts and collect those that do not join in one step."""
    checked = 0
    bad = []
    for t in terms:
        steps = all_redexes(t, rules)
        if len(steps) < 2:
            continue
        reducts = {}
        for s in steps:
            u = apply_step(t, s)
            reducts.setdefault(alpha_key(u), u)
        if len(reducts) < 2:
            continue
        checked += 1
        nexts = [{alpha_key(v) for v in one_step_reducts(u, rules)} for u in reducts.values()]
        for i in range(len(nexts)):
            for j in range(i + 1, len(nexts)):
                if not nexts[i] & nexts[j]:
                    bad.append(t)
    return checked, bad


def random_s_normal_form(t: Term, rng: random.Random, max_steps: int = 100_000) -> Term:
    for _ in range(max_steps):
        steps = all_redexes(t, SUBSTITUTION)
        if not steps:
            return t
        t = apply_step(t, rng.choice(steps))
    raise AssertionError("substitution reduction did not terminate")


def s_confluence_failures(terms: Iterable[Term], rng: random.Random) -> List[Term]:
    bad = []
    for t in terms:
        if t.es == 0:
            continue
        target = alpha_key(unfold(t))
        results = [normalize(t, SUBSTITUTION, p, 100_000)[0] for p in Policy]
        results.append(random_s_normal_form(t, rng))
        if any(alpha_key(r) != target for r in results):
            bad.append(t)
    return bad


def non_head_s_steps(t: Term) -> List[ReductionStep]:
    """→s steps that are not the linear head substitution step."""
    hls = head_ls_redex(t)
    out = []
    for s in all_redexes(t, SUBSTITUTION):
        if hls is not None and s.rule is RuleLabel.LS and s.redex == hls.redex and s.var_occ == hls.var_occ:
            continue
        out.append(s)
    return out


def swap_failures(terms: Iterable[Term]) -> tuple:
    """Check that a non-head s-step followed by a head dB-step can be reordered."""
    checked = 0
    bad = []
    for t in terms:
        for s in non_head_s_steps(t):
            u = apply_step(t, s)
            for d in all_redexes(u, {RuleLabel.HeadDB}):
                r = alpha_key(apply_step(u, d))
                checked += 1
                ok = False
                for d2 in all_redexes(t, {RuleLabel.HeadDB}):
                    mid = apply_step(t, d2)
                    if any(alpha_key(apply_step(mid, s2)) == r for s2 in non_head_s_steps(mid)):
                        ok = True
                        break
                if not ok:
                    bad.append((t, s, d))
    return checked, bad


def distinct_bases(t: Term) -> Term:
    """α-rename every binder of ``t`` to its own base name, disjoint from the free names."""
    counter = iter(range(1, 10**9))

    def go(s: Term, env: Dict[Name, Name]) -> Term:
        if isinstance(s, Var):
            return Var(env.get(s.name, s.name))
        if isinstance(s, App):
            return App(go(s.fun, env), go(s.arg, env))
        new = Name(f"b{next(counter)}_")
        inner = dict(env)
        inner[s.binder] = new
        if isinstance(s, Abs):
            return Abs(new, go(s.body, inner))
        return Sub(go(s.body, inner), new, go(s.arg, env))

    return go(t, {})


def base_key(t: Term):
    """α-key that also forgets the tags renaming adds to free names.

    Renaming only ever changes tags, so once every binder of the initial
    term has its own base, two box-subterms with equal base keys differ
    only by the renamings reduction performs to avoid capture.
    """
    return _base_key(t, {}, 0)


def _base_key(t: Term, env: Dict[Name, int], depth: int):
    if isinstance(t, Var):
        lvl = env.get(t.name)
        return ("f", t.name.base) if lvl is None else ("b", depth - lvl)
    if isinstance(t, App):
        return ("@", _base_key(t.fun, env, depth), _base_key(t.arg, env, depth))
    inner = dict(env)
    inner[t.binder] = depth
    body = _base_key(t.body, inner, depth + 1)
    if isinstance(t, Abs):
        return ("λ", body)
    return ("[]", body, _base_key(t.arg, env, depth))


def subterm_property_failures(trace_terms: List[Term]) -> List[int]:
    """Indices of trace terms with a box-subterm that is not a box-subterm of the first term.

    The first term should have distinct binder bases (see ``distinct_bases``).
    """
    allowed = {base_key(b) for _, b in box_subterms(trace_terms[0])}
    bad = []
    for i, u in enumerate(trace_terms):
        if any(base_key(b) not in allowed for _, b in box_subterms(u)):
            bad.append(i)
    return bad


def linear_fit(xs: List[float], ys: List[float]) -> tuple:
    """Least-squares line y = a x + b and the worst relative residual."""
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    a = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    b = my - a * mx
    worst = max(abs(y - (a * x + b)) / y for x, y in zip(xs, ys))
    return a, b, worst


def matrix_invariant_failures(a: Term, b: Term, cap: int = 200) -> List[str]:
    """Check the per-cell invariants of the unfolding checker on a completely filled matrix.

    Every cell must be auto-coherent and within the cardinality bound.
    Where both relative unfoldings have at most ``cap`` nodes, the value must
    project onto their free variables and agree with the brute-force
    unifying renaming (⊥ exactly when none exists).
    """
    from linsub.reduction import UnfoldTooLarge
    from linsub.unfoldcheck import BOTTOM, auto_coherent, fill_matrix, preprocess, relative_unfold, unifying_renaming_oracle

    pp = preprocess(a, b)
    m = fill_matrix(pp, complete=True)
    bound = pp.a.size * pp.b.size
    problems = []

    def rel(host, occs):
        out = {}
        for occ in occs:
            try:
                u = relative_unfold(host, occ, cap)
            except UnfoldTooLarge:
                continue
            if u.size <= cap:
                out[occ] = u
        return out

    rel_a = rel(pp.a, m.rows)
    rel_b = rel(pp.b, m.cols)
    for occ_a, occ_b, v in m.done():
        if v is not BOTTOM:
            if not auto_coherent(v):
                problems.append(f"not auto-coherent at {occ_a} × {occ_b}")
            if len(v) > bound:
                problems.append(f"cardinality at {occ_a} × {occ_b}")
        ua, ub = rel_a.get(occ_a), rel_b.get(occ_b)
        if ua is None or ub is None:
            continue
        oracle = unifying_renaming_oracle(ua, ub)
        if v is BOTTOM:
            if oracle is not None:
                problems.append(f"⊥ but a renaming exists at {occ_a} × {occ_b}")
            continue
        if {p for p, _ in v} != set(ua.fv) or {q for _, q in v} != set(ub.fv):
            problems.append(f"free-variable projection at {occ_a} × {occ_b}")
        if oracle != v:
            problems.append(f"renaming disagrees at {occ_a} × {occ_b}")
    if m.blank_count():
        problems.append("blank cells after a complete fill")
    return problems
