"""Redexes, single steps, normalization with traces, and unfoldings.

Seven relations are covered: β and head β on λ-terms; dB (β at a
distance), ls and gc on terms with explicit substitutions; and the head
restrictions of dB and ls, whose union is linear head reduction.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from .terms import (
    Abs,
    App,
    Name,
    Occurrence,
    Step,
    Sub,
    Term,
    Var,
    alpha_eq,
    child,
    fresh,
    nodes_along,
    preorder,
    rename_free,
    subst,
    with_child,
)


class RuleLabel(Enum):
    Beta = "beta"
    HeadBeta = "head-beta"
    DB = "dB"
    LS = "ls"
    GC = "gc"
    HeadDB = "head-dB"
    HeadLS = "head-ls"

    def __str__(self):
        return self.value


class Policy(Enum):
    LeftmostOutermost = "lo"
    LSFirst = "ls-first"
    DBFirst = "db-first"


HEAD = frozenset({RuleLabel.HeadBeta})
LINEAR_HEAD = frozenset({RuleLabel.HeadDB, RuleLabel.HeadLS})
SUBSTITUTION = frozenset({RuleLabel.LS, RuleLabel.GC})
LSUB = frozenset({RuleLabel.DB, RuleLabel.LS, RuleLabel.GC})

_LS_CLASS = frozenset({RuleLabel.LS, RuleLabel.HeadLS})
_DB_CLASS = frozenset({RuleLabel.DB, RuleLabel.HeadDB})
_ON_PURE = frozenset({RuleLabel.Beta, RuleLabel.HeadBeta})


class ReductionError(ValueError):
    pass


class NotPure(ReductionError):
    pass


class StaleStep(ReductionError):
    pass


class UnfoldTooLarge(ReductionError):
    pass


@dataclass(frozen=True)
class ReductionStep:
    rule: RuleLabel
    redex: Occurrence
    var_occ: Optional[Occurrence] = None

    def to_json(self) -> dict:
        return {
            "rule": self.rule.value,
            "redex": [int(s) for s in self.redex],
            "var_occ": None if self.var_occ is None else [int(s) for s in self.var_occ],
        }

    @classmethod
    def from_json(cls, d: dict) -> "ReductionStep":
        occ = d.get("var_occ")
        return cls(
            RuleLabel(d["rule"]),
            tuple(Step(i) for i in d["redex"]),
            None if occ is None else tuple(Step(i) for i in occ),
        )


@dataclass
class Trace:
    initial: Term
    steps: List[Tuple[ReductionStep, int]] = field(default_factory=list)
    counts: Dict[RuleLabel, int] = field(default_factory=dict)

    def record(self, step: ReductionStep, result: Term) -> None:
        self.steps.append((step, result.size))
        self.counts[step.rule] = self.counts.get(step.rule, 0) + 1

    def __len__(self):
        return len(self.steps)

    def count(self, *rules: RuleLabel) -> int:
        return sum(self.counts.get(r, 0) for r in rules)

    @property
    def mult_count(self) -> int:
        return self.count(RuleLabel.DB, RuleLabel.HeadDB)

    def rules(self) -> List[RuleLabel]:
        return [s.rule for s, _ in self.steps]

    def extend(self, other: "Trace") -> None:
        for step, size in other.steps:
            self.steps.append((step, size))
            self.counts[step.rule] = self.counts.get(step.rule, 0) + 1

    def terms(self) -> Iterator[Term]:
        """Replay the trace, yielding the initial and every intermediate term."""
        t = self.initial
        yield t
        for step, size in self.steps:
            t = apply_step(t, step)
            if t.size != size:
                raise StaleStep(f"replayed size {t.size} differs from recorded {size}")
            yield t

    def final(self) -> Term:
        t = self.initial
        for t in self.terms():
            pass
        return t


class StepLimitExceeded(Exception):
    def __init__(self, trace: Trace, term: Term, limit: int):
        super().__init__(f"step limit {limit} exceeded")
        self.trace = trace
        self.term = term
        self.limit = limit


# ----------------------------------------------------------------------------
# Redex matching


def _db_core(t: Term) -> Optional[Abs]:
    """If ``t`` is ``(λx.s)L``, the abstraction; else None."""
    while isinstance(t, Sub):
        t = t.body
    return t if isinstance(t, Abs) else None


def _is_db_redex(t: Term) -> bool:
    return isinstance(t, App) and _db_core(t.fun) is not None


def _is_beta_redex(t: Term) -> bool:
    return isinstance(t, App) and isinstance(t.fun, Abs)


def free_occurrences(t: Term, x: Name) -> List[Occurrence]:
    """Paths to the free occurrences of ``x`` in ``t``, in preorder."""
    out = []
    stack = [((), t)]
    while stack:
        path, s = stack.pop()
        if x not in s.fv:
            continue
        if isinstance(s, Var):
            out.append(path)
        elif isinstance(s, App):
            stack.append((path + (Step.ARG,), s.arg))
            stack.append((path + (Step.FUN,), s.fun))
        elif isinstance(s, Abs):
            if s.binder != x:
                stack.append((path + (Step.ABS_BODY,), s.body))
        else:
            stack.append((path + (Step.SUB_ARG,), s.arg))
            if s.binder != x:
                stack.append((path + (Step.SUB_BODY,), s.body))
    return out


def head_path(t: Term) -> Tuple[Occurrence, Var]:
    """The head context reaching the head variable of ``t``, and that variable."""
    path = []
    while not isinstance(t, Var):
        if isinstance(t, App):
            path.append(Step.FUN)
            t = t.fun
        elif isinstance(t, Abs):
            path.append(Step.ABS_BODY)
            t = t.body
        else:
            path.append(Step.SUB_BODY)
            t = t.body
    return tuple(path), t


def head_ls_redex(t: Term) -> Optional[ReductionStep]:
    """The unique linear head substitution redex of ``t``, if any."""
    path, v = head_path(t)
    nodes = nodes_along(t, path)
    # the innermost binder of the head variable along the spine decides
    for i in range(len(path) - 1, -1, -1):
        node = nodes[i]
        if isinstance(node, (Abs, Sub)) and node.binder == v.name:
            if isinstance(node, Sub):
                return ReductionStep(RuleLabel.HeadLS, path[:i], path[i:])
            return None
    return None


def _spine(t: Term, through_subs: bool) -> Iterator[Tuple[Occurrence, Term]]:
    path: Tuple[Step, ...] = ()
    while True:
        yield path, t
        if isinstance(t, App):
            path, t = path + (Step.FUN,), t.fun
        elif isinstance(t, Abs):
            path, t = path + (Step.ABS_BODY,), t.body
        elif isinstance(t, Sub) and through_subs:
            path, t = path + (Step.SUB_BODY,), t.body
        else:
            return


def _require_pure(t: Term, rule: RuleLabel) -> None:
    if t.es:
        raise NotPure(f"{rule} is defined on λ-terms only")


def _node_redexes(path: Occurrence, s: Term, rule: RuleLabel) -> Iterator[ReductionStep]:
    if rule is RuleLabel.Beta:
        if _is_beta_redex(s):
            yield ReductionStep(rule, path)
    elif rule is RuleLabel.DB:
        if _is_db_redex(s):
            yield ReductionStep(rule, path)
    elif rule is RuleLabel.LS:
        if isinstance(s, Sub):
            for occ in free_occurrences(s.body, s.binder):
                yield ReductionStep(rule, path, (Step.SUB_BODY,) + occ)
    elif rule is RuleLabel.GC:
        if isinstance(s, Sub) and s.binder not in s.body.fv:
            yield ReductionStep(rule, path)


def redexes(t: Term, rule: RuleLabel) -> List[ReductionStep]:
    """All redexes of ``rule`` in ``t`` in left-to-right preorder of their roots."""
    if rule in _ON_PURE:
        _require_pure(t, rule)
    if rule is RuleLabel.HeadBeta:
        return [ReductionStep(rule, p) for p, s in _spine(t, False) if _is_beta_redex(s)]
    if rule is RuleLabel.HeadDB:
        return [ReductionStep(rule, p) for p, s in _spine(t, True) if _is_db_redex(s)]
    if rule is RuleLabel.HeadLS:
        step = head_ls_redex(t)
        return [] if step is None else [step]
    out = []
    for path, s in preorder(t):
        out.extend(_node_redexes(path, s, rule))
    return out


def all_redexes(t: Term, rules: Iterable[RuleLabel]) -> List[ReductionStep]:
    """Redexes of several rules merged in preorder of their roots (stable per rule order)."""
    order = sorted(set(rules), key=lambda r: list(RuleLabel).index(r))
    steps = []
    for r in order:
        steps.extend(redexes(t, r))
    steps.sort(key=lambda s: _preorder_key(s.redex))
    return steps


def _preorder_key(path: Occurrence):
    # preorder on paths is lexicographic order on steps, prefixes first
    return tuple(int(s) for s in path)


# ----------------------------------------------------------------------------
# Contraction


def _check_context(rule: RuleLabel, path: Occurrence) -> None:
    if rule is RuleLabel.HeadBeta:
        bad = {Step.ARG, Step.SUB_ARG, Step.SUB_BODY}
    elif rule in (RuleLabel.HeadDB, RuleLabel.HeadLS):
        bad = {Step.ARG, Step.SUB_ARG}
    else:
        return
    if any(s in bad for s in path):
        raise StaleStep(f"{rule} redex is not in head position")


def _contract_db(redex: App) -> Term:
    u = redex.arg

    def go(s: Term) -> Term:
        if isinstance(s, Abs):
            return Sub(s.body, s.binder, u)
        y, body = s.binder, s.body
        if y in u.fv:
            # moving u under [y/...] would capture y
            y2 = fresh(y)
            body = rename_free(body, y, y2)
            y = y2
        return Sub(go(body), y, s.arg)

    return go(redex.fun)


def _contract_ls(redex: Sub, var_occ: Occurrence) -> Term:
    x, u = redex.binder, redex.arg
    if not var_occ or var_occ[0] is not Step.SUB_BODY:
        raise StaleStep("ls occurrence must start inside the substitution body")
    inner = var_occ[1:]
    body = redex.body
    if x in u.fv:
        # the substitution's own binder would capture the copy
        x2 = fresh(x)
        body = rename_free(body, x, x2)
        x = x2
    # rebuild the body along the path, renaming binders that would capture fv(u)
    spine = []
    node = body
    for step in inner:
        if isinstance(node, (Abs, Sub)) and step in (Step.ABS_BODY, Step.SUB_BODY):
            if node.binder == x:
                raise StaleStep("occurrence is not free in the substitution body")
            if node.binder in u.fv:
                y2 = fresh(node.binder)
                renamed = rename_free(node.body, node.binder, y2)
                node = Abs(y2, renamed) if isinstance(node, Abs) else Sub(renamed, y2, node.arg)
        spine.append(node)
        try:
            node = child(node, step)
        except ValueError:
            raise StaleStep("occurrence path does not fit the term") from None
    if not (isinstance(node, Var) and node.name == x):
        raise StaleStep("occurrence does not point at the substituted variable")
    # terms are immutable and every operation renames on capture, so the copy can be shared
    new: Term = u
    for parent, step in zip(reversed(spine), reversed(inner)):
        new = with_child(parent, step, new)
    return Sub(new, x, u)


def contract(redex: Term, step: ReductionStep) -> Term:
    rule = step.rule
    if rule in _ON_PURE:
        if not _is_beta_redex(redex):
            raise StaleStep(f"no β-redex at {list(step.redex)}")
        return subst(redex.fun.body, redex.fun.binder, redex.arg)
    if rule in _DB_CLASS:
        if not _is_db_redex(redex):
            raise StaleStep(f"no dB-redex at {list(step.redex)}")
        return _contract_db(redex)
    if rule in _LS_CLASS:
        if not isinstance(redex, Sub) or step.var_occ is None:
            raise StaleStep(f"no ls-redex at {list(step.redex)}")
        if rule is RuleLabel.HeadLS and any(s in (Step.ARG, Step.SUB_ARG) for s in step.var_occ):
            raise StaleStep("head-ls occurrence must be reached through a head context")
        return _contract_ls(redex, step.var_occ)
    if not isinstance(redex, Sub) or redex.binder in redex.body.fv:
        raise StaleStep(f"no gc-redex at {list(step.redex)}")
    return redex.body


def apply_step(t: Term, step: ReductionStep, validate: bool = True) -> Term:
    """Contract ``step`` in ``t``; ``validate=False`` skips the head-ls recheck for selected steps."""
    if step.rule in _ON_PURE:
        _require_pure(t, step.rule)
    _check_context(step.rule, step.redex)
    try:
        spine = nodes_along(t, step.redex)
    except ValueError:
        raise StaleStep(f"redex path {list(step.redex)} does not fit the term") from None
    new = contract(spine[-1], step)
    if validate and step.rule is RuleLabel.HeadLS:
        # the whole occurrence must be in head position, with no capture on the way
        if head_ls_redex(t) != step:
            raise StaleStep("not the head-ls redex of the term")
    for node, s in zip(reversed(spine[:-1]), reversed(step.redex)):
        new = with_child(node, s, new)
    return new


# ----------------------------------------------------------------------------
# Normalization


def _first_in_class(t: Term, rules: frozenset) -> Optional[ReductionStep]:
    """The leftmost-outermost redex among ``rules``."""
    if not rules:
        return None
    if rules & _ON_PURE:
        _require_pure(t, next(iter(rules & _ON_PURE)))
    head_only = rules <= (HEAD | LINEAR_HEAD)
    if head_only:
        candidates = []
        if RuleLabel.HeadLS in rules:
            s = head_ls_redex(t)
            if s is not None:
                candidates.append(s)
        if rules & {RuleLabel.HeadBeta, RuleLabel.HeadDB}:
            through = RuleLabel.HeadDB in rules
            for p, node in _spine(t, through):
                if (RuleLabel.HeadDB in rules and _is_db_redex(node)) or (
                    RuleLabel.HeadBeta in rules and _is_beta_redex(node)
                ):
                    rule = RuleLabel.HeadDB if RuleLabel.HeadDB in rules and _is_db_redex(node) else RuleLabel.HeadBeta
                    candidates.append(ReductionStep(rule, p))
                    break
        if not candidates:
            return None
        return min(candidates, key=lambda s: len(s.redex))
    only_subs = not (rules - SUBSTITUTION - {RuleLabel.HeadLS})
    return _first_by_walk(t, rules, only_subs)


def _first_by_walk(t: Term, rules: frozenset, only_subs: bool) -> Optional[ReductionStep]:
    order = [r for r in RuleLabel if r in rules]
    head_ls = head_ls_redex(t) if RuleLabel.HeadLS in rules else None
    stack: List[Tuple[Occurrence, Term, bool]] = [((), t, True)]
    while stack:
        path, s, in_head = stack.pop()
        if only_subs and s.es == 0:
            continue
        if head_ls is not None and head_ls.redex == path:
            return head_ls
        for r in order:
            if r is RuleLabel.HeadLS:
                continue
            if r in (RuleLabel.HeadBeta, RuleLabel.HeadDB):
                if not in_head:
                    continue
                ok = _is_beta_redex(s) if r is RuleLabel.HeadBeta else _is_db_redex(s)
                if ok:
                    return ReductionStep(r, path)
                continue
            for step in _node_redexes(path, s, r):
                return step
        if isinstance(s, App):
            stack.append((path + (Step.ARG,), s.arg, False))
            stack.append((path + (Step.FUN,), s.fun, in_head))
        elif isinstance(s, Abs):
            stack.append((path + (Step.ABS_BODY,), s.body, in_head))
        elif isinstance(s, Sub):
            stack.append((path + (Step.SUB_ARG,), s.arg, False))
            stack.append((path + (Step.SUB_BODY,), s.body, in_head))
    return None


def select(t: Term, rules: Iterable[RuleLabel], policy: Policy = Policy.LeftmostOutermost) -> Optional[ReductionStep]:
    rules = frozenset(rules)
    if policy is Policy.LeftmostOutermost:
        return _first_in_class(t, rules)
    preferred = _LS_CLASS if policy is Policy.LSFirst else _DB_CLASS
    step = _first_in_class(t, rules & preferred)
    if step is None:
        step = _first_in_class(t, rules - preferred)
    return step


def normalize(
    t: Term,
    rules: Iterable[RuleLabel],
    policy: Policy = Policy.LeftmostOutermost,
    max_steps: int = 10_000,
) -> Tuple[Term, Trace]:
    """Reduce until no enabled redex remains; raise StepLimitExceeded past ``max_steps``."""
    rules = frozenset(rules)
    trace = Trace(t)
    while True:
        step = select(t, rules, policy)
        if step is None:
            return t, trace
        if len(trace) >= max_steps:
            raise StepLimitExceeded(trace, t, max_steps)
        t = apply_step(t, step, validate=False)
        trace.record(step, t)


def count_steps(t: Term, rules: Iterable[RuleLabel], policy=Policy.LeftmostOutermost, max_steps=10_000):
    """Like normalize, without keeping the trace; returns (normal form, steps, mult steps)."""
    rules = frozenset(rules)
    n = mult = 0
    while True:
        step = select(t, rules, policy)
        if step is None:
            return t, n, mult
        if n >= max_steps:
            raise StepLimitExceeded(Trace(t), t, max_steps)
        t = apply_step(t, step, validate=False)
        n += 1
        if step.rule in _DB_CLASS:
            mult += 1


# ----------------------------------------------------------------------------
# Unfoldings


DEFAULT_UNFOLD_CAP = 10**7


def unfold(t: Term, cap: int = DEFAULT_UNFOLD_CAP) -> Term:
    """The substitution normal form, computed structurally."""
    if t.es == 0:
        return t
    return _unfold(t, cap, {})


def _unfold(t: Term, cap: int, memo: Dict[int, Term]) -> Term:
    if t.es == 0:
        return t
    done = memo.get(id(t))
    if done is not None:
        return done
    if isinstance(t, App):
        out: Term = App(_unfold(t.fun, cap, memo), _unfold(t.arg, cap, memo))
    elif isinstance(t, Abs):
        out = Abs(t.binder, _unfold(t.body, cap, memo))
    else:
        body = _unfold(t.body, cap, memo)
        arg = _unfold(t.arg, cap, memo)
        out = subst(body, t.binder, arg)
    if out.size > cap:
        raise UnfoldTooLarge(f"unfolding exceeds {cap} nodes")
    memo[id(t)] = out
    return out


def unfold_by_rewriting(t: Term, max_steps: int = 100_000) -> Term:
    """Oracle: the same normal form reached by →s rewriting."""
    nf, _ = normalize(t, SUBSTITUTION, Policy.LeftmostOutermost, max_steps)
    return nf


def linear_unfold(t: Term) -> Tuple[Term, int]:
    """Normal form for linear head substitution, and the number of steps."""
    n = 0
    while True:
        step = head_ls_redex(t)
        if step is None:
            return t, n
        t = apply_step(t, step, validate=False)
        n += 1


# ----------------------------------------------------------------------------
# Projection and simulation


def project_trace(t0: Term, trace: Trace) -> List[Term]:
    """Unfold every term of a linear head trace, dropping consecutive repeats."""
    if not alpha_eq(t0, trace.initial):
        raise StaleStep("trace does not start at the given term")
    bad = set(trace.counts) - LINEAR_HEAD
    if bad:
        raise ReductionError(f"foreign rules in trace: {sorted(map(str, bad))}")
    out: List[Term] = []
    for s in trace.terms():
        u = unfold(s)
        if not out or not alpha_eq(out[-1], u):
            out.append(u)
    return out


def simulate_head(t: Term, step: ReductionStep) -> Tuple[Term, Trace]:
    """Replay one head β-step as a head dB-step followed by substitution normalization."""
    _require_pure(t, RuleLabel.HeadBeta)
    if step.rule is not RuleLabel.HeadBeta:
        raise ReductionError("simulate_head expects a head-beta step")
    _check_context(step.rule, step.redex)
    trace = Trace(t)
    db = ReductionStep(RuleLabel.HeadDB, step.redex)
    s = apply_step(t, db)
    trace.record(db, s)
    s, rest = normalize(s, SUBSTITUTION, Policy.LeftmostOutermost, max_steps=10**6)
    trace.extend(rest)
    return s, trace


def is_one_head_step(t: Term, u: Term) -> bool:
    """Whether some head β-step turns ``t`` into a term α-equal to ``u``."""
    return any(alpha_eq(apply_step(t, s), u) for s in redexes(t, RuleLabel.HeadBeta))


# ----------------------------------------------------------------------------
# Serialization


def trace_to_json(trace: Trace, final: Optional[Term] = None, extra: Optional[dict] = None) -> dict:
    from .syntax import show

    if final is None:
        final = trace.final()
    data = {
        "initial": show(trace.initial),
        "steps": [dict(step.to_json(), size=size) for step, size in trace.steps],
        "final": show(final),
        "counts": {r.value: trace.counts[r] for r in RuleLabel if r in trace.counts},
    }
    if extra:
        data.update(extra)
    return data


def trace_from_json(data: dict) -> Tuple[Trace, Term]:
    from .syntax import parse

    trace = Trace(parse(data["initial"]))
    for d in data["steps"]:
        step = ReductionStep.from_json(d)
        trace.steps.append((step, int(d["size"])))
        trace.counts[step.rule] = trace.counts.get(step.rule, 0) + 1
    return trace, parse(data["final"])


def replay_json(data: dict) -> bool:
    """Re-run a serialized trace; true iff every size and the final term check out."""
    trace, final = trace_from_json(data)
    try:
        last = trace.final()
    except ReductionError:
        return False
    expected = {r.value: n for r, n in trace.counts.items()}
    return alpha_eq(last, final) and expected == data.get("counts", expected)


def dump_trace(trace: Trace, path: str, final: Optional[Term] = None, extra: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(trace_to_json(trace, final, extra), fh, indent=2, ensure_ascii=False)
