"""Terms of the λ-calculus with explicit substitutions.

A single tree type covers both pure λ-terms and terms of the
linear-substitution calculus: ``Var``, ``App``, ``Abs`` and ``Sub``.
``Sub(t, x, u)`` is written ``t[x/u]`` and, like ``Abs(x, t)``, binds
``x`` in ``t`` only.

Nodes are immutable and cache their size, free variables, hash and a few
structural flags at construction time, so subtrees can be shared freely
between terms.
"""

import itertools
import threading
from enum import IntEnum
from typing import Dict, Iterator, List, NamedTuple, Sequence, Tuple

TAG_SEPARATOR = "#"


class Name(NamedTuple):
    base: str
    tag: int = 0

    def __str__(self):
        if self.tag == 0:
            return self.base
        return f"{self.base}{TAG_SEPARATOR}{self.tag}"


class _FreshCounter:
    """Process-wide source of name tags; tags handed out are never reused."""

    def __init__(self):
        self._next = 1
        self._lock = threading.Lock()

    def take(self) -> int:
        with self._lock:
            tag = self._next
            self._next += 1
            return tag

    def reserve(self, tag: int) -> None:
        with self._lock:
            if tag >= self._next:
                self._next = tag + 1


_counter = _FreshCounter()


def fresh(base) -> Name:
    """A name never produced before, keeping the base of ``base``."""
    if isinstance(base, Name):
        base = base.base
    return Name(base, _counter.take())


def reserve_tag(tag: int) -> None:
    _counter.reserve(tag)


def make_name(text: str) -> Name:
    """Build a Name from its printed form (``x`` or ``x#12``)."""
    base, sep, tag = text.partition(TAG_SEPARATOR)
    if not sep:
        return Name(base, 0)
    n = int(tag)
    reserve_tag(n)
    return Name(base, n)


# ----------------------------------------------------------------------------
# Nodes


class Term:
    __slots__ = ("size", "fv", "es", "shallow", "_hash")

    def __eq__(self, other):
        if not isinstance(other, Term):
            return NotImplemented
        return term_eq(self, other)

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self):
        return self._hash

    def __str__(self):
        from .syntax import show

        return show(self)

    def __repr__(self):
        from .syntax import show

        if self.size > 200:
            return f"<{type(self).__name__} of size {self.size}>"
        return f"<{show(self)}>"

    @property
    def is_pure(self) -> bool:
        return self.es == 0


class Var(Term):
    __slots__ = ("name",)

    def __init__(self, name: Name):
        self.name = name
        self.size = 1
        self.fv = frozenset((name,))
        self.es = 0
        self.shallow = True
        self._hash = hash((0, name))


class App(Term):
    __slots__ = ("fun", "arg")

    def __init__(self, fun: Term, arg: Term):
        self.fun = fun
        self.arg = arg
        self.size = 1 + fun.size + arg.size
        if not arg.fv or arg.fv <= fun.fv:
            self.fv = fun.fv
        elif not fun.fv:
            self.fv = arg.fv
        else:
            self.fv = fun.fv | arg.fv
        self.es = fun.es + arg.es
        self.shallow = fun.shallow and arg.shallow
        self._hash = hash((1, fun._hash, arg._hash))


class Abs(Term):
    __slots__ = ("binder", "body")

    def __init__(self, binder: Name, body: Term):
        self.binder = binder
        self.body = body
        self.size = 1 + body.size
        self.fv = body.fv - {binder} if binder in body.fv else body.fv
        self.es = body.es
        self.shallow = body.shallow
        self._hash = hash((2, binder, body._hash))


class Sub(Term):
    __slots__ = ("body", "binder", "arg")

    def __init__(self, body: Term, binder: Name, arg: Term):
        self.body = body
        self.binder = binder
        self.arg = arg
        self.size = 1 + body.size + arg.size
        inner = body.fv - {binder} if binder in body.fv else body.fv
        self.fv = inner | arg.fv if arg.fv else inner
        self.es = 1 + body.es + arg.es
        self.shallow = body.shallow and arg.es == 0
        self._hash = hash((3, binder, body._hash, arg._hash))


def term_eq(a: Term, b: Term) -> bool:
    """Exact syntactic equality, names included."""
    stack = [(a, b)]
    while stack:
        s, t = stack.pop()
        if s is t:
            continue
        if s._hash != t._hash or type(s) is not type(t) or s.size != t.size:
            return False
        if isinstance(s, Var):
            if s.name != t.name:
                return False
        elif isinstance(s, App):
            stack.append((s.arg, t.arg))
            stack.append((s.fun, t.fun))
        elif isinstance(s, Abs):
            if s.binder != t.binder:
                return False
            stack.append((s.body, t.body))
        else:
            if s.binder != t.binder:
                return False
            stack.append((s.arg, t.arg))
            stack.append((s.body, t.body))
    return True


def var(text: str) -> Var:
    return Var(make_name(text))


def lam(binders: str, body: Term) -> Term:
    """``lam("x y", b)`` is ``λx.λy.b``."""
    for b in reversed(binders.split()):
        body = Abs(make_name(b), body)
    return body


def apps(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


# ----------------------------------------------------------------------------
# Occurrences


class Step(IntEnum):
    FUN = 0
    ARG = 1
    ABS_BODY = 2
    SUB_BODY = 3
    SUB_ARG = 4


Occurrence = Tuple[Step, ...]

_HEAD_STEPS = frozenset((Step.FUN, Step.ABS_BODY, Step.SUB_BODY))
_PURE_HEAD_STEPS = frozenset((Step.FUN, Step.ABS_BODY))
_BOX_STEPS = frozenset((Step.ARG, Step.SUB_ARG))


def child(t: Term, step: Step) -> Term:
    if step is Step.FUN and isinstance(t, App):
        return t.fun
    if step is Step.ARG and isinstance(t, App):
        return t.arg
    if step is Step.ABS_BODY and isinstance(t, Abs):
        return t.body
    if step is Step.SUB_BODY and isinstance(t, Sub):
        return t.body
    if step is Step.SUB_ARG and isinstance(t, Sub):
        return t.arg
    raise ValueError(f"step {step.name} does not apply to {type(t).__name__}")


def children(t: Term) -> List[Tuple[Step, Term]]:
    if isinstance(t, App):
        return [(Step.FUN, t.fun), (Step.ARG, t.arg)]
    if isinstance(t, Abs):
        return [(Step.ABS_BODY, t.body)]
    if isinstance(t, Sub):
        return [(Step.SUB_BODY, t.body), (Step.SUB_ARG, t.arg)]
    return []


def with_child(t: Term, step: Step, new: Term) -> Term:
    if step is Step.FUN:
        return App(new, t.arg)
    if step is Step.ARG:
        return App(t.fun, new)
    if step is Step.ABS_BODY:
        return Abs(t.binder, new)
    if step is Step.SUB_BODY:
        return Sub(new, t.binder, t.arg)
    return Sub(t.body, t.binder, new)


def subterm_at(t: Term, path: Sequence[Step]) -> Term:
    for step in path:
        t = child(t, step)
    return t


def nodes_along(t: Term, path: Sequence[Step]) -> List[Term]:
    """The nodes visited by ``path``, root first, focus last."""
    out = [t]
    for step in path:
        t = child(t, step)
        out.append(t)
    return out


def replace_at(t: Term, path: Sequence[Step], new: Term) -> Term:
    """Plug ``new`` in the context described by ``path`` (no renaming)."""
    spine = nodes_along(t, path)
    for node, step in zip(reversed(spine[:-1]), reversed(path)):
        new = with_child(node, step, new)
    return new


def is_valid_path(t: Term, path: Sequence[Step]) -> bool:
    try:
        subterm_at(t, path)
    except ValueError:
        return False
    return True


def is_head_context(path: Sequence[Step]) -> bool:
    return all(s in _HEAD_STEPS for s in path)


def is_pure_head_context(path: Sequence[Step]) -> bool:
    return all(s in _PURE_HEAD_STEPS for s in path)


def box_depth(path: Sequence[Step]) -> int:
    return sum(1 for s in path if s in _BOX_STEPS)


def binders_on_path(t: Term, path: Sequence[Step]) -> List[Name]:
    """Names bound by the context ``path`` at its hole, outermost first."""
    out = []
    for step in path:
        if step is Step.ABS_BODY or step is Step.SUB_BODY:
            out.append(t.binder)
        t = child(t, step)
    return out


def preorder(t: Term) -> Iterator[Tuple[Occurrence, Term]]:
    """All (occurrence, subterm) pairs, node before children, left to right."""
    stack = [((), t)]
    while stack:
        path, node = stack.pop()
        yield path, node
        kids = children(node)
        for step, c in reversed(kids):
            stack.append((path + (step,), c))


# ----------------------------------------------------------------------------
# Binding


def fv(t: Term) -> frozenset:
    return t.fv


def rename_free(t: Term, x: Name, y: Name) -> Term:
    """Replace free ``x`` by ``y``; ``y`` must not be bound anywhere in ``t``."""
    return subst(t, x, Var(y))


def subst(t: Term, x: Name, u: Term) -> Term:
    """Capture-avoiding ``t{x/u}``; binders are renamed only on capture."""
    return _subst(t, x, u, {})


def _subst(t: Term, x: Name, u: Term, memo: Dict[int, Term]) -> Term:
    # memo is keyed by node identity: shared subterms are rewritten once
    if x not in t.fv:
        return t
    done = memo.get(id(t))
    if done is not None:
        return done
    if isinstance(t, Var):
        out: Term = u
    elif isinstance(t, App):
        out = App(_subst(t.fun, x, u, memo), _subst(t.arg, x, u, memo))
    elif isinstance(t, Abs):
        y, body = t.binder, t.body
        if y in u.fv:
            y2 = fresh(y)
            body = rename_free(body, y, y2)
            y = y2
            out = Abs(y, _subst(body, x, u, {}))
        else:
            out = Abs(y, _subst(body, x, u, memo))
    else:
        arg = _subst(t.arg, x, u, memo)
        y, body = t.binder, t.body
        if y != x and x in body.fv:
            if y in u.fv:
                y2 = fresh(y)
                body = rename_free(body, y, y2)
                y = y2
                body = _subst(body, x, u, {})
            else:
                body = _subst(body, x, u, memo)
        out = Sub(body, y, arg)
    memo[id(t)] = out
    return out


def freshen(t: Term) -> Term:
    """A copy of ``t`` whose bound names are all fresh; α-equal to ``t``."""
    return _freshen(t, {})


def _freshen(t: Term, env: Dict[Name, Name]) -> Term:
    if isinstance(t, Var):
        new = env.get(t.name)
        return t if new is None else Var(new)
    if isinstance(t, App):
        return App(_freshen(t.fun, env), _freshen(t.arg, env))
    y = fresh(t.binder)
    inner = dict(env)
    inner[t.binder] = y
    if isinstance(t, Abs):
        return Abs(y, _freshen(t.body, inner))
    return Sub(_freshen(t.body, inner), y, _freshen(t.arg, env))


def alpha_eq(t: Term, u: Term) -> bool:
    """α-equivalence; free names must coincide exactly."""
    levels_t: Dict[Name, List[int]] = {}
    levels_u: Dict[Name, List[int]] = {}
    counter = itertools.count(1)
    stack: list = [(0, t, u)]
    while stack:
        op, a, b = stack.pop()
        if op == 1:
            level = next(counter)
            levels_t.setdefault(a, []).append(level)
            levels_u.setdefault(b, []).append(level)
            continue
        if op == 2:
            levels_t[a].pop()
            levels_u[b].pop()
            continue
        if type(a) is not type(b) or a.size != b.size:
            return False
        if isinstance(a, Var):
            la = levels_t.get(a.name)
            lb = levels_u.get(b.name)
            la = la[-1] if la else None
            lb = lb[-1] if lb else None
            if la is None and lb is None:
                if a.name != b.name:
                    return False
            elif la != lb:
                return False
        elif isinstance(a, App):
            stack.append((0, a.arg, b.arg))
            stack.append((0, a.fun, b.fun))
        else:
            stack.append((2, a.binder, b.binder))
            stack.append((0, a.body, b.body))
            stack.append((1, a.binder, b.binder))
            if isinstance(a, Sub):
                stack.append((0, a.arg, b.arg))
    return True


def alpha_key(t: Term):
    """A hashable locally-nameless rendering: α-equal terms get equal keys."""
    return _alpha_key(t, {}, 0)


def _alpha_key(t: Term, env: Dict[Name, int], depth: int):
    if isinstance(t, Var):
        lvl = env.get(t.name)
        return ("f", t.name) if lvl is None else ("b", depth - lvl)
    if isinstance(t, App):
        return ("@", _alpha_key(t.fun, env, depth), _alpha_key(t.arg, env, depth))
    inner = dict(env)
    inner[t.binder] = depth
    body = _alpha_key(t.body, inner, depth + 1)
    if isinstance(t, Abs):
        return ("λ", body)
    return ("[]", body, _alpha_key(t.arg, env, depth))


# ----------------------------------------------------------------------------
# Structural predicates


def size(t: Term) -> int:
    return t.size


def es_count(t: Term) -> int:
    return t.es


def is_pure(t: Term) -> bool:
    return t.es == 0


def is_shallow(t: Term) -> bool:
    return t.shallow


def box_subterms(t: Term) -> List[Tuple[Occurrence, Term]]:
    return [(p, s) for p, s in preorder(t) if p and p[-1] in _BOX_STEPS]


def all_names(t: Term) -> set:
    names = set()
    for _, s in preorder(t):
        if isinstance(s, Var):
            names.add(s.name)
        elif not isinstance(s, App):
            names.add(s.binder)
    return names


# ----------------------------------------------------------------------------
# The exponential family


class FamilyTooLarge(ValueError):
    pass


def gen_family(n: int, cap: int = 24) -> Tuple[Term, Term]:
    """``(t_n, r_n)``: ``t_n`` has linear size, its normal form ``r_n`` is exponential."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > cap:
        raise FamilyTooLarge(f"refusing to build r_{n}: cap is {cap}")
    x, y = Name("x"), Name("y")
    u = App(App(Var(y), Var(x)), Var(x))
    t, r = u, u
    for _ in range(n):
        t = App(Abs(x, t), u)
        r = App(App(Var(y), r), r)
    return t, r


def family_term(n: int) -> Term:
    """Only ``t_n``; no size cap since it is linear."""
    x, y = Name("x"), Name("y")
    u = App(App(Var(y), Var(x)), Var(x))
    t = u
    for _ in range(n):
        t = App(Abs(x, t), u)
    return t


def family_nf_size(n: int) -> int:
    s = 5
    for _ in range(n):
        s = 2 * s + 3
    return s
