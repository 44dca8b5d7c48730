import random

import pytest
from hypothesis import given

from linsub.generate import random_redex_rich, random_term, terms_of_size, terms_up_to
from linsub.measure import NotShallow, TraceStats, head_measure, hh_head, is_hh_occurrence, stats_from_rules, trace_stats
from linsub.reduction import (
    LINEAR_HEAD,
    Policy,
    ReductionError,
    RuleLabel,
    StepLimitExceeded,
    Trace,
    apply_step,
    head_ls_redex,
    linear_unfold,
    normalize,
    redexes,
    simulate_head,
)
from linsub.syntax import parse
from linsub.terms import Name, gen_family

from strategies import pure_terms, shallow_terms

P = parse
x, y = Name("x"), Name("y")


@pytest.mark.parametrize(
    "t,name,expected",
    [
        ("x y", "x", True),
        ("x y", "y", False),
        ("(x y)[x/y r]", "y", True),
        ("(x y)[x/y r]", "x", False),
        ("\\y.y x", "y", False),
        ("(\\x.x) y", "x", False),
        ("(z y)[z/x][x/w]", "w", True),
        ("(z y)[z/\\w.x][x/w]", "w", True),
        ("(z y)[z/\\w.w]", "w", False),
        ("(z y)[z/x]", "x", True),
    ],
)
def test_hh_occurrence(t, name, expected):
    assert is_hh_occurrence(P(t), Name(name)) is expected


def test_hh_head_blocked_by_abstraction():
    assert hh_head(P("\\x.x y")) is None
    assert hh_head(P("(\\x.z) y")) == Name("z")


@pytest.mark.parametrize(
    "t,expected",
    [("\\x.x", 0), ("((x y)[x/y r])[y/u]", 2), ("(x y)[y/u]", 0), ("((x y)[x/y r] w)[y/u]", 2), ("x[x/y][y/z]", 2)],
)
def test_head_measure_examples(t, expected):
    assert head_measure(P(t)) == expected


def test_head_measure_requires_shallow():
    with pytest.raises(NotShallow):
        head_measure(P("x[x/y[y/z]]"))


@given(pure_terms())
def test_pure_terms_measure_zero(t):
    assert head_measure(t) == 0


@pytest.mark.parametrize("n", range(1, 8))
def test_measure_decreases_and_is_exact(n):
    for t in terms_of_size(n, with_subs=True, shallow=True):
        m = head_measure(t)
        step = head_ls_redex(t)
        assert (m == 0) == (step is None)
        if step is not None:
            assert head_measure(apply_step(t, step)) == m - 1
        assert linear_unfold(t)[1] == m


@given(shallow_terms(16))
def test_exactness_random(t):
    assert linear_unfold(t)[1] == head_measure(t)


def test_budget_and_quadratic_bound_on_small_pure_terms():
    rng = random.Random(5)
    for t in list(terms_up_to(7)) + [random_redex_rich(rng, 16) for _ in range(200)]:
        try:
            _, trace = normalize(t, LINEAR_HEAD, max_steps=200)
        except StepLimitExceeded:
            continue
        mult = 0
        for u, (step, _) in zip(list(trace.terms())[1:], trace.steps):
            mult += step.rule is RuleLabel.HeadDB
            assert head_measure(u) <= u.es == mult
        stats = trace_stats(trace)
        assert stats.quadratic_ok


@pytest.mark.parametrize("policy", list(Policy))
def test_family_stats(policy):
    t, _ = gen_family(5)
    _, trace = normalize(t, LINEAR_HEAD, policy)
    stats = trace_stats(trace)
    assert stats.mult == 5 and stats.total <= 30
    assert stats.total == stats.mult + stats.expo


def test_empty_trace_stats():
    assert trace_stats(Trace(P("x"))) == TraceStats(0, 0, 0, 0, True)


def test_phases_count_maximal_db_runs():
    H, L = RuleLabel.HeadDB, RuleLabel.HeadLS
    stats = stats_from_rules([H, H, L, H, L, L, H])
    assert (stats.mult, stats.expo, stats.phases) == (4, 3, 3)
    assert not stats_from_rules([H, L, L, L]).quadratic_ok


def test_foreign_rules_rejected():
    with pytest.raises(ReductionError):
        stats_from_rules([RuleLabel.GC])


def test_simulated_fragments():
    t = P("(\\x.x x) y")
    (step,) = redexes(t, RuleLabel.HeadBeta)
    _, trace = simulate_head(t, step)
    stats = trace_stats(trace, strict=False)
    assert (stats.mult, stats.expo) == (1, 2)


def test_shallow_random_terms_exactness():
    rng = random.Random(9)
    for _ in range(300):
        t = random_term(rng, rng.randint(5, 30), (x, y, Name("z")), sub_rate=0.4, shallow=True)
        assert linear_unfold(t)[1] == head_measure(t)
