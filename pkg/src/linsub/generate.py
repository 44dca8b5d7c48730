"""Exhaustive and random term generators used by tests and benchmarks."""

import random
from functools import lru_cache
from typing import Iterator, List, Sequence, Tuple

from .terms import Abs, App, Name, Sub, Term, Var

DEFAULT_NAMES = (Name("x"), Name("y"))


def terms_of_size(
    n: int,
    names: Sequence[Name] = DEFAULT_NAMES,
    with_subs: bool = False,
    shallow: bool = False,
) -> List[Term]:
    """Every term with exactly ``n`` nodes whose names come from ``names``.

    ``with_subs`` admits explicit substitutions; ``shallow`` further
    restricts their arguments to pure terms.
    """
    return list(_table(tuple(names), with_subs, shallow)(n))


def terms_up_to(n: int, names: Sequence[Name] = DEFAULT_NAMES, with_subs=False, shallow=False) -> Iterator[Term]:
    for k in range(1, n + 1):
        yield from terms_of_size(k, names, with_subs, shallow)


def count_terms(n: int, names: Sequence[Name] = DEFAULT_NAMES, with_subs=False, shallow=False) -> int:
    return len(terms_of_size(n, names, with_subs, shallow))


@lru_cache(maxsize=None)
def _table(names: Tuple[Name, ...], with_subs: bool, shallow: bool):
    @lru_cache(maxsize=None)
    def pure(n: int) -> Tuple[Term, ...]:
        return _build(n, names, pure, pure, False)

    if not with_subs:
        return pure

    @lru_cache(maxsize=None)
    def general(n: int) -> Tuple[Term, ...]:
        return _build(n, names, general, pure if shallow else general, True)

    return general


def _build(n, names, rec, sub_arg, with_subs) -> Tuple[Term, ...]:
    if n <= 0:
        return ()
    if n == 1:
        return tuple(Var(x) for x in names)
    out = []
    for x in names:
        out.extend(Abs(x, b) for b in rec(n - 1))
    for k in range(1, n - 1):
        left = rec(k)
        right = rec(n - 1 - k)
        out.extend(App(f, a) for f in left for a in right)
        if with_subs:
            args = sub_arg(n - 1 - k)
            for x in names:
                out.extend(Sub(b, x, u) for b in left for u in args)
    return tuple(out)


# ----------------------------------------------------------------------------
# Random terms


def random_term(
    rng: random.Random,
    size: int,
    names: Sequence[Name] = DEFAULT_NAMES,
    sub_rate: float = 0.0,
    shallow: bool = True,
) -> Term:
    """A random term with exactly ``size`` nodes.

    Shapes are drawn uniformly per node kind, not uniformly over all terms.
    ``sub_rate`` is the chance that a binary node is a substitution.
    """
    if size <= 1:
        return Var(rng.choice(names))
    if size == 2:
        return Abs(rng.choice(names), Var(rng.choice(names)))
    if rng.random() < 0.3:
        return Abs(rng.choice(names), random_term(rng, size - 1, names, sub_rate, shallow))
    k = rng.randint(1, size - 2)
    left = random_term(rng, k, names, sub_rate, shallow)
    if sub_rate and rng.random() < sub_rate:
        arg_rate = 0.0 if shallow else sub_rate
        right = random_term(rng, size - 1 - k, names, arg_rate, shallow)
        return Sub(left, rng.choice(names), right)
    right = random_term(rng, size - 1 - k, names, sub_rate, shallow)
    return App(left, right)


def random_pure_term(rng: random.Random, size: int, names: Sequence[Name] = DEFAULT_NAMES) -> Term:
    return random_term(rng, size, names, 0.0)


def random_redex_rich(rng: random.Random, size: int, names: Sequence[Name] = DEFAULT_NAMES) -> Term:
    """Random pure term biased towards head β-redexes."""
    if size < 4:
        return random_pure_term(rng, size, names)
    if rng.random() < 0.5:
        k = rng.randint(1, size - 3)
        body = random_redex_rich(rng, k, names)
        arg = random_redex_rich(rng, size - 2 - k, names)
        return App(Abs(rng.choice(names), body), arg)
    if rng.random() < 0.5:
        return Abs(rng.choice(names), random_redex_rich(rng, size - 1, names))
    k = rng.randint(1, size - 2)
    return App(random_redex_rich(rng, k, names), random_redex_rich(rng, size - 1 - k, names))
