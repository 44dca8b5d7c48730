import random

import pytest
from hypothesis import given

from linsub.generate import random_term, terms_of_size
from linsub.reduction import LINEAR_HEAD, Policy, normalize, unfold
from linsub.syntax import parse
from linsub.terms import Name, Step, alpha_eq, freshen, gen_family
from linsub.unfoldcheck import (
    BOTTOM,
    BlankPredecessor,
    auto_coherent,
    coherent,
    combine,
    fill_matrix,
    gc_normalize,
    judge_cell,
    naive_unfold_eq,
    preprocess,
    relative_unfold,
    rule_name,
    show_value,
    unfold_eq,
    unifying_renaming_oracle,
    verdict,
)

from strategies import pure_terms, terms
from support import matrix_invariant_failures

P = parse
x, y, z, w = (Name(c) for c in "xyzw")


def test_relative_unfold_examples():
    host = P("(x y)[y/u]")
    assert alpha_eq(relative_unfold(host, ()), P("x u"))
    assert alpha_eq(relative_unfold(host, (Step.SUB_BODY,)), P("x u"))
    assert alpha_eq(relative_unfold(P("(x y) r"), (Step.FUN,)), P("x y"))
    nested = P("(x z)[x/y][y/w]")
    assert alpha_eq(relative_unfold(nested, (Step.SUB_BODY, Step.SUB_BODY, Step.FUN)), P("w"))


def test_gc_normalize():
    assert gc_normalize(P("y[x/z]")) == P("y")
    assert gc_normalize(P("(x y)[y/u][z/v]")) == P("(x y)[y/u]")
    assert gc_normalize(P("x[x/y[z/w]]")) == P("x[x/y]")


def test_preprocess_examples():
    pp = preprocess(P("\\x.x"), P("\\x.x"))
    assert pp.a.binder != pp.b.binder
    assert pp.subst_names == frozenset()
    pp = preprocess(P("y[x/z]"), P("w"))
    assert str(pp.a) == "y#1" and str(pp.b) == "w#2"
    assert pp.rename_a == {y: Name("y", 1)} and pp.rename_b == {w: Name("w", 2)}
    pp = preprocess(P("(x x)[x/\\y.y]"), P("(\\z.z) (\\w.w)"))
    assert pp.subst_names == frozenset({Name("x", 1)})


def _names_by_space(pp):
    from linsub.terms import Abs, Sub, preorder

    spaces = []
    for t in (pp.a, pp.b):
        subs, abss = set(), set()
        for _, s in preorder(t):
            if isinstance(s, Sub):
                subs.add(s.binder)
            elif isinstance(s, Abs):
                abss.add(s.binder)
        spaces += [subs, abss, set(t.fv)]
    return spaces


@given(terms(10), terms(10))
def test_preprocess_name_spaces_disjoint(a, b):
    pp = preprocess(a, b)
    spaces = _names_by_space(pp)
    for i in range(len(spaces)):
        for j in range(i + 1, len(spaces)):
            assert not spaces[i] & spaces[j]
    assert alpha_eq(unfold(pp.a), unfold(pp.a))


def test_coherence_and_combine():
    assert coherent({(x, y)}, {(x, y)})
    assert not coherent({(x, y)}, {(x, z)})
    assert not coherent({(y, x)}, {(z, x)})
    assert coherent(set(), {(x, y), (x, z)})
    assert auto_coherent({(x, y), (z, w)})
    assert not auto_coherent({(x, y), (x, z)})
    assert combine(frozenset({(x, y)}), frozenset({(z, w)})) == frozenset({(x, y), (z, w)})
    assert combine(frozenset({(x, y)}), frozenset({(x, z)})) is BOTTOM
    assert combine(BOTTOM, frozenset()) is BOTTOM
    assert show_value(BOTTOM) == "⊥"
    assert show_value(frozenset({(x, y)})) == "{x↦y}"


def _cell(pp, occ_a, occ_b):
    m = fill_matrix(pp, complete=True)
    return m[occ_a, occ_b]


def test_judgment_rules():
    pp = preprocess(P("x"), P("y"))
    assert _cell(pp, (), ()) == frozenset({(Name("x", 1), Name("y", 2))})
    assert rule_name(pp, (), ()) == "var"
    pp = preprocess(P("\\x.x"), P("u r"))
    assert _cell(pp, (), ()) is BOTTOM
    assert rule_name(pp, (), ()) == "err"
    pp = preprocess(P("\\x.x"), P("\\y.y"))
    assert _cell(pp, (), ()) == frozenset()
    pp = preprocess(P("(x x)[x/\\y.y]"), P("(\\z.z) (\\w.w)"))
    assert rule_name(pp, (), ()) == "sub_l"
    assert rule_name(pp, (Step.SUB_BODY, Step.FUN), (Step.FUN,)) == "unf_l"
    assert rule_name(pp, (Step.SUB_BODY,), ()) == "@"


def test_abstraction_rule_cases():
    # λ1: pair present and removed; λ2: neither binder mentioned; λ3: conflicting pair
    assert unfold_eq(P("\\x.x"), P("\\y.y"))
    assert unfold_eq(P("\\x.z"), P("\\y.z"))
    assert not unfold_eq(P("\\x.x"), P("\\y.x"))
    assert not unfold_eq(P("\\x.z"), P("\\y.y"))


def test_judge_cell_needs_premises():
    pp = preprocess(P("x y"), P("x y"))
    with pytest.raises(BlankPredecessor):
        judge_cell(pp, (), (), lambda a, b: None)
    assert judge_cell(pp, (Step.FUN,), (Step.FUN,), lambda a, b: None) == frozenset(
        {(Name("x", 1), Name("x", 2))}
    )


def test_matrix_examples():
    m = fill_matrix(preprocess(P("\\x.x"), P("\\y.y")), complete=True)
    assert len(m.cells) == 4 and m.root == frozenset() and m.blank_count() == 0
    m = fill_matrix(preprocess(P("(x x)[x/\\y.y]"), P("(\\z.z) (\\w.w)")))
    assert m.root == frozenset() and verdict(m)
    assert fill_matrix(preprocess(P("\\x.x"), P("\\x.\\y.y"))).root is BOTTOM
    tsv = fill_matrix(preprocess(P("x"), P("x")), complete=True).to_tsv()
    assert tsv.splitlines()[1] == "ε\t{x#1↦x#2}" or tsv.splitlines()[1].startswith("ε\t{x#")


@pytest.mark.parametrize(
    "a,b,expected",
    [
        ("(x x)[x/\\y.y]", "(\\z.z) (\\w.w)", True),
        ("\\x.x", "\\x.x x", False),
        ("x", "x", True),
        ("x", "y", False),
        ("(x y)[x/y][y/z]", "z z", True),
        ("(x y)[x/y][y/z]", "y z", False),
        ("((x y)[x/y r])[y/u]", "u r u", True),
        ("\\y.x[x/y]", "\\z.z", True),
        ("(\\y.x)[x/y]", "\\z.y", True),
        ("(\\y.x)[x/y]", "\\y.y", False),
    ],
)
def test_unfold_eq_examples(a, b, expected):
    assert unfold_eq(P(a), P(b)) is expected
    assert unfold_eq(P(a), P(b), worklist=True) is expected
    assert naive_unfold_eq(P(a), P(b)) is expected


@given(terms(10), terms(10))
def test_unfold_eq_matches_oracle(a, b):
    assert unfold_eq(a, b) == naive_unfold_eq(a, b)


@given(terms(12))
def test_unfold_eq_positive_pairs(t):
    assert unfold_eq(t, unfold(t))
    assert unfold_eq(t, freshen(t))


def test_worklist_fills_identical_values():
    rng = random.Random(4)
    for _ in range(100):
        a = random_term(rng, 10, sub_rate=0.3, shallow=False)
        b = random_term(rng, 10, sub_rate=0.3, shallow=False)
        pp = preprocess(a, b)
        m1 = fill_matrix(pp)
        m2 = fill_matrix(pp, worklist=True)
        for occ_a, occ_b, v in m1.done():
            assert m2[occ_a, occ_b] == v


@pytest.mark.parametrize(
    "t,u,expected",
    [("x", "y", {(x, y)}), ("\\z.x z", "\\z.y z", {(x, y)}), ("x x", "x y", None), ("\\z.z", "\\w.w", set())],
)
def test_unifying_renaming_oracle(t, u, expected):
    got = unifying_renaming_oracle(P(t), P(u))
    assert (got is None and expected is None) or got == frozenset(expected)


@given(pure_terms(8), pure_terms(8))
def test_oracle_agrees_with_alpha_up_to_renaming(t, u):
    v = unifying_renaming_oracle(t, u)
    if alpha_eq(t, u):
        assert v is not None and all(p == q for p, q in v)


def test_matrix_invariants_on_small_pairs():
    small = [t for n in range(1, 5) for t in terms_of_size(n, with_subs=True)]
    rng = random.Random(2)
    for _ in range(300):
        a, b = rng.choice(small), rng.choice(small)
        assert matrix_invariant_failures(a, b) == []
    for n in range(4):
        t, r = gen_family(n)
        nf, _ = normalize(t, LINEAR_HEAD)
        assert matrix_invariant_failures(nf, r) == []


@pytest.mark.parametrize("n", [4, 8, 12])
def test_family_compact_forms(n):
    t, _ = gen_family(n)
    a, _ = normalize(t, LINEAR_HEAD, Policy.LeftmostOutermost)
    b, _ = normalize(t, LINEAR_HEAD, Policy.DBFirst)
    assert unfold_eq(a, b)
    assert unfold_eq(a, t) is False
