"""Deciding equality of unfoldings without computing them.

Two terms with explicit substitutions are compared through a matrix
indexed by pairs of occurrences. Each cell holds either ⊥ or a
constraining set, a set of name pairs relating the free variables of the
two relative unfoldings. Cells are computed from the judgment rules by
memoized recursion from the root cell.
"""

from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .reduction import DEFAULT_UNFOLD_CAP, UnfoldTooLarge, unfold
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
    nodes_along,
    reserve_tag,
    subst,
)


class _Bottom:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "⊥"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()

ConstrainingSet = FrozenSet[Tuple[Name, Name]]
Value = Union[_Bottom, ConstrainingSet]


class DependencyCycle(RuntimeError):
    pass


class BlankPredecessor(RuntimeError):
    pass


def is_bottom(v) -> bool:
    return v is BOTTOM


def coherent(a: Iterable[Tuple[Name, Name]], b: Iterable[Tuple[Name, Name]]) -> bool:
    left: Dict[Name, Name] = {}
    right: Dict[Name, Name] = {}
    for x, y in a:
        left[x] = y
        right[y] = x
    for x, y in b:
        if x in left and left[x] != y:
            return False
        if y in right and right[y] != x:
            return False
    return True


def auto_coherent(a: Iterable[Tuple[Name, Name]]) -> bool:
    a = list(a)
    return coherent(a, a)


def combine(v: Value, w: Value) -> Value:
    if v is BOTTOM or w is BOTTOM:
        return BOTTOM
    if not coherent(v, w):
        return BOTTOM
    return v | w


def show_value(v: Value) -> str:
    if v is BOTTOM:
        return "⊥"
    pairs = sorted(v)
    return "{" + ",".join(f"{x}↦{y}" for x, y in pairs) + "}"


# ----------------------------------------------------------------------------
# Relative unfoldings


def relative_unfold(host: Term, occ: Sequence[Step], cap: int = DEFAULT_UNFOLD_CAP) -> Term:
    """Unfolding of the focus, then the substitutions of the enclosing context, innermost first."""
    nodes = nodes_along(host, occ)
    out = unfold(nodes[-1], cap)
    for node, step in zip(reversed(nodes[:-1]), reversed(occ)):
        if step is Step.SUB_BODY:
            out = subst(out, node.binder, unfold(node.arg, cap))
            if out.size > cap:
                raise UnfoldTooLarge(f"relative unfolding exceeds {cap} nodes")
    return out


# ----------------------------------------------------------------------------
# Preprocessing


def gc_normalize(t: Term) -> Term:
    """Drop every substitution whose variable does not occur, bottom-up."""
    if t.es == 0:
        return t
    if isinstance(t, App):
        return App(gc_normalize(t.fun), gc_normalize(t.arg))
    if isinstance(t, Abs):
        return Abs(t.binder, gc_normalize(t.body))
    body = gc_normalize(t.body)
    if t.binder not in body.fv:
        return body
    return Sub(body, t.binder, gc_normalize(t.arg))


@dataclass
class PreprocessedPair:
    a: Term
    b: Term
    subst_names: FrozenSet[Name]
    rename_a: Dict[Name, Name]
    rename_b: Dict[Name, Name]
    original_a: Optional[Term] = None
    original_b: Optional[Term] = None


def _rename_apart(t: Term, tags: Iterable[int]) -> Tuple[Term, Dict[Name, Name], set, int]:
    """Give every binder and every free name a new tag drawn from ``tags``, in preorder."""
    tags = iter(tags)
    free_map: Dict[Name, Name] = {}
    subs = set()
    last = 0

    def new_name(base: Name) -> Name:
        nonlocal last
        last = next(tags)
        return Name(base.base, last)

    def go(s: Term, env: Dict[Name, Name]) -> Term:
        if isinstance(s, Var):
            hit = env.get(s.name)
            if hit is None:
                hit = free_map.get(s.name)
                if hit is None:
                    hit = free_map[s.name] = new_name(s.name)
            return Var(hit)
        if isinstance(s, App):
            f = go(s.fun, env)
            return App(f, go(s.arg, env))
        y = new_name(s.binder)
        inner = dict(env)
        inner[s.binder] = y
        if isinstance(s, Abs):
            return Abs(y, go(s.body, inner))
        subs.add(y)
        body = go(s.body, inner)
        return Sub(body, y, go(s.arg, env))

    out = go(t, {})
    return out, free_map, subs, last


def preprocess(a: Term, b: Term) -> PreprocessedPair:
    """gc-normalize, then rename so that all six name spaces are disjoint."""
    a1 = gc_normalize(a)
    b1 = gc_normalize(b)
    a2, map_a, subs_a, last_a = _rename_apart(a1, range(1, 1 << 62, 2))
    b2, map_b, subs_b, last_b = _rename_apart(b1, range(2, 1 << 62, 2))
    reserve_tag(max(last_a, last_b))
    return PreprocessedPair(a2, b2, frozenset(subs_a | subs_b), map_a, map_b, a, b)


# ----------------------------------------------------------------------------
# Indexed view of a term: nodes numbered in preorder


_VAR, _APP, _ABS, _SUB = range(4)


class _Indexed:
    __slots__ = ("nodes", "paths", "kind", "left", "right", "name", "unf")

    def __init__(self, t: Term, subst_names: FrozenSet[Name]):
        self.nodes: List[Term] = []
        self.paths: List[Occurrence] = []
        self.kind: List[int] = []
        # left: fun / body; right: arg / substitution argument
        self.left: List[int] = []
        self.right: List[int] = []
        self.name: List[Optional[Name]] = []
        # for variables bound by a substitution, the node id of that substitution's argument
        self.unf: List[int] = []
        sub_arg: Dict[Name, int] = {}
        stack: list = [(t, (), -1, 0)]
        while stack:
            s, path, parent, slot = stack.pop()
            i = len(self.nodes)
            if parent >= 0:
                (self.left if slot == 0 else self.right)[parent] = i
            self.nodes.append(s)
            self.paths.append(path)
            self.left.append(-1)
            self.right.append(-1)
            self.unf.append(-1)
            if isinstance(s, Var):
                self.kind.append(_VAR)
                self.name.append(s.name)
                if s.name in subst_names:
                    self.unf[i] = -2  # resolved once all substitutions are numbered
            elif isinstance(s, App):
                self.kind.append(_APP)
                self.name.append(None)
                stack.append((s.arg, path + (Step.ARG,), i, 1))
                stack.append((s.fun, path + (Step.FUN,), i, 0))
            elif isinstance(s, Abs):
                self.kind.append(_ABS)
                self.name.append(s.binder)
                stack.append((s.body, path + (Step.ABS_BODY,), i, 0))
            else:
                self.kind.append(_SUB)
                self.name.append(s.binder)
                sub_arg[s.binder] = i
                stack.append((s.arg, path + (Step.SUB_ARG,), i, 1))
                stack.append((s.body, path + (Step.SUB_BODY,), i, 0))
        for i, k in enumerate(self.unf):
            if k == -2:
                owner = sub_arg.get(self.name[i])
                if owner is None:
                    raise ValueError(f"substituted name {self.name[i]} has no binding substitution")
                self.unf[i] = self.right[owner]
        self._check_scoping(sub_arg)

    def _check_scoping(self, sub_arg: Dict[Name, int]) -> None:
        # the binding substitution of a variable must enclose it through its body
        for i, k in enumerate(self.unf):
            if k < 0:
                continue
            owner = sub_arg[self.name[i]]
            p, q = self.paths[owner], self.paths[i]
            if q[: len(p)] != p or len(q) <= len(p) or q[len(p)] is not Step.SUB_BODY:
                raise ValueError(f"variable {self.name[i]} is not in the scope of its substitution")

    def __len__(self):
        return len(self.nodes)

    def index_of(self, path: Sequence[Step]) -> int:
        i = 0
        for step in path:
            if step in (Step.FUN, Step.ABS_BODY, Step.SUB_BODY):
                i = self.left[i]
            else:
                i = self.right[i]
            if i < 0:
                raise ValueError("path does not fit the term")
        return i


# ----------------------------------------------------------------------------
# Rules


_RULE_NAMES = (
    "sub_l",
    "sub_r",
    "unf_l",
    "unf_r",
    "var",
    "@",
    "λ",
    "err",
)


def _dependencies(A: _Indexed, B: _Indexed, i: int, j: int) -> Tuple[str, Tuple[Tuple[int, int], ...]]:
    """Which rule decides cell (i, j), and the cells it needs."""
    ka, kb = A.kind[i], B.kind[j]
    if ka == _SUB:
        return "sub_l", ((A.left[i], j),)
    if kb == _SUB:
        return "sub_r", ((i, B.left[j]),)
    if ka == _VAR and A.unf[i] >= 0:
        return "unf_l", ((A.unf[i], j),)
    if kb == _VAR and B.unf[j] >= 0:
        return "unf_r", ((i, B.unf[j]),)
    if ka == _VAR and kb == _VAR:
        return "var", ()
    if ka == _APP and kb == _APP:
        return "@", ((A.left[i], B.left[j]), (A.right[i], B.right[j]))
    if ka == _ABS and kb == _ABS:
        return "λ", ((A.left[i], B.left[j]),)
    return "err", ()


def _judge(A: _Indexed, B: _Indexed, i: int, j: int, rule: str, premises: List[Value]) -> Value:
    if rule in ("sub_l", "sub_r", "unf_l", "unf_r"):
        return premises[0]
    if rule == "var":
        return frozenset({(A.name[i], B.name[j])})
    if rule == "@":
        return combine(premises[0], premises[1])
    if rule == "λ":
        return _abstraction_rule(A.name[i], B.name[j], premises[0])
    return BOTTOM


def _abstraction_rule(x: Name, y: Name, v: Value) -> Value:
    if v is BOTTOM:
        return BOTTOM
    for p, q in v:
        if (p == x and q != y) or (q == y and p != x):
            return BOTTOM
    if (x, y) in v:
        return v - {(x, y)}
    return v


def judge_cell(
    pp: PreprocessedPair,
    occ_a: Sequence[Step],
    occ_b: Sequence[Step],
    lookup: Callable[[Occurrence, Occurrence], Optional[Value]],
) -> Value:
    """Apply the one rule that fits the two foci; premises come from ``lookup``."""
    A = _Indexed(pp.a, pp.subst_names)
    B = _Indexed(pp.b, pp.subst_names)
    i, j = A.index_of(occ_a), B.index_of(occ_b)
    rule, deps = _dependencies(A, B, i, j)
    premises = []
    for di, dj in deps:
        v = lookup(A.paths[di], B.paths[dj])
        if v is None:
            raise BlankPredecessor(f"premise cell {A.paths[di]} × {B.paths[dj]} is still blank")
        premises.append(v)
    return _judge(A, B, i, j, rule, premises)


def rule_name(pp: PreprocessedPair, occ_a: Sequence[Step], occ_b: Sequence[Step]) -> str:
    A = _Indexed(pp.a, pp.subst_names)
    B = _Indexed(pp.b, pp.subst_names)
    return _dependencies(A, B, A.index_of(occ_a), B.index_of(occ_b))[0]


# ----------------------------------------------------------------------------
# The matrix


@dataclass
class UnfoldingMatrix:
    pp: PreprocessedPair
    rows: List[Occurrence]
    cols: List[Occurrence]
    # cell (i, j) is at i * len(cols) + j; None is the blank marker
    cells: List[Optional[Value]]
    writes: int = 0

    def __getitem__(self, key: Tuple[Occurrence, Occurrence]) -> Optional[Value]:
        occ_a, occ_b = key
        return self.cells[self._index(occ_a, occ_b)]

    def _index(self, occ_a, occ_b) -> int:
        i = self.rows.index(tuple(occ_a))
        j = self.cols.index(tuple(occ_b))
        return i * len(self.cols) + j

    @property
    def root(self) -> Optional[Value]:
        return self.cells[0]

    def done(self) -> List[Tuple[Occurrence, Occurrence, Value]]:
        w = len(self.cols)
        return [(self.rows[k // w], self.cols[k % w], v) for k, v in enumerate(self.cells) if v is not None]

    def blank_count(self) -> int:
        return sum(1 for v in self.cells if v is None)

    def to_tsv(self) -> str:
        def occ(p):
            return ".".join(str(int(s)) for s in p) or "ε"

        w = len(self.cols)
        lines = ["\t".join(["occ"] + [occ(c) for c in self.cols])]
        for i, r in enumerate(self.rows):
            row = [occ(r)]
            for j in range(w):
                v = self.cells[i * w + j]
                row.append("#" if v is None else show_value(v))
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"


def fill_matrix(pp: PreprocessedPair, complete: bool = False, worklist: bool = False) -> UnfoldingMatrix:
    """Compute the root cell and everything it depends on.

    ``complete`` fills every cell. ``worklist`` uses the slower scheme that
    repeatedly picks a blank cell whose premises are all known.
    """
    A = _Indexed(pp.a, pp.subst_names)
    B = _Indexed(pp.b, pp.subst_names)
    m = UnfoldingMatrix(pp, A.paths, B.paths, [None] * (len(A) * len(B)))
    if worklist:
        _fill_worklist(A, B, m)
    else:
        targets = range(len(m.cells)) if complete else (0,)
        for k in targets:
            if m.cells[k] is None:
                _fill_from(A, B, m, k)
    return m


def _fill_from(A: _Indexed, B: _Indexed, m: UnfoldingMatrix, start: int) -> None:
    w = len(B)
    cells = m.cells
    in_progress = set()
    stack = [start]
    while stack:
        k = stack[-1]
        if cells[k] is not None:
            stack.pop()
            continue
        i, j = divmod(k, w)
        rule, deps = _dependencies(A, B, i, j)
        missing = [di * w + dj for di, dj in deps if cells[di * w + dj] is None]
        if missing:
            if k in in_progress:
                raise DependencyCycle(f"cell {A.paths[i]} × {B.paths[j]} depends on itself")
            in_progress.add(k)
            for d in missing:
                if d in in_progress:
                    di, dj = divmod(d, w)
                    raise DependencyCycle(f"cycle through {A.paths[di]} × {B.paths[dj]}")
                stack.append(d)
            continue
        in_progress.discard(k)
        premises = [cells[di * w + dj] for di, dj in deps]
        cells[k] = _judge(A, B, i, j, rule, premises)
        m.writes += 1
        stack.pop()


def _fill_worklist(A: _Indexed, B: _Indexed, m: UnfoldingMatrix) -> None:
    w = len(B)
    n = len(m.cells)
    waiting = [0] * n
    users: List[List[int]] = [[] for _ in range(n)]
    rules = []
    for k in range(n):
        i, j = divmod(k, w)
        rule, deps = _dependencies(A, B, i, j)
        rules.append((rule, deps))
        waiting[k] = len(deps)
        for di, dj in deps:
            users[di * w + dj].append(k)
    ready = [k for k in range(n) if waiting[k] == 0]
    while ready:
        k = ready.pop()
        i, j = divmod(k, w)
        rule, deps = rules[k]
        if m.cells[k] is not None:
            raise AssertionError("cell written twice")
        m.cells[k] = _judge(A, B, i, j, rule, [m.cells[di * w + dj] for di, dj in deps])
        m.writes += 1
        for u in users[k]:
            waiting[u] -= 1
            if waiting[u] == 0:
                ready.append(u)
    if any(v is None for v in m.cells):
        raise DependencyCycle("some cells never became ready")


# ----------------------------------------------------------------------------
# The verdict


def translate(v: ConstrainingSet, pp: PreprocessedPair) -> Optional[set]:
    """Map a root value back to original free names; None if a name has no preimage."""
    inv_a = {new: old for old, new in pp.rename_a.items()}
    inv_b = {new: old for old, new in pp.rename_b.items()}
    out = set()
    for x, y in v:
        if x not in inv_a or y not in inv_b:
            return None
        out.add((inv_a[x], inv_b[y]))
    return out


def verdict(m: UnfoldingMatrix) -> bool:
    v = m.root
    if v is None:
        raise BlankPredecessor("root cell is blank")
    if v is BOTTOM:
        return False
    pairs = translate(v, m.pp)
    return pairs is not None and all(x == y for x, y in pairs)


def unfold_eq(a: Term, b: Term, worklist: bool = False) -> bool:
    """Whether ``a`` and ``b`` have α-equal unfoldings, decided without unfolding."""
    return verdict(fill_matrix(preprocess(a, b), worklist=worklist))


def naive_unfold_eq(a: Term, b: Term, cap: int = DEFAULT_UNFOLD_CAP) -> bool:
    return alpha_eq(unfold(a, cap), unfold(b, cap))


def unifying_renaming_oracle(t: Term, u: Term) -> Optional[ConstrainingSet]:
    """The bijection on free names that renames ``t`` into ``u``, if one exists."""
    pairs: Dict[Name, Name] = {}
    back: Dict[Name, Name] = {}
    stack: list = [(t, u, {}, {}, 0)]
    while stack:
        s, r, env_s, env_r, depth = stack.pop()
        if type(s) is not type(r):
            return None
        if isinstance(s, Var):
            ls, lr = env_s.get(s.name), env_r.get(r.name)
            if ls is not None or lr is not None:
                if ls != lr:
                    return None
                continue
            if pairs.setdefault(s.name, r.name) != r.name:
                return None
            if back.setdefault(r.name, s.name) != s.name:
                return None
        elif isinstance(s, App):
            stack.append((s.arg, r.arg, env_s, env_r, depth))
            stack.append((s.fun, r.fun, env_s, env_r, depth))
        elif isinstance(s, Abs):
            es, er = dict(env_s), dict(env_r)
            es[s.binder] = er[r.binder] = depth
            stack.append((s.body, r.body, es, er, depth + 1))
        else:
            raise ValueError("the oracle compares λ-terms only")
    return frozenset(pairs.items())
