"""Scott encodings and a compiler from Turing machines to λ-terms.

Strings, symbols and machine configurations are encoded as selectors.
Every builder is written in continuation-passing style: it takes the
continuation first and applies it to its result, so that head reduction
alone drives the whole computation.
"""

import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .reduction import (
    HEAD,
    LINEAR_HEAD,
    Policy,
    StepLimitExceeded,
    count_steps,
    normalize,
    unfold,
)
from .terms import Abs, App, Name, Term, Var

MOVES = ("L", "R", "S")


class NotAScottString(ValueError):
    pass


class DecodeMismatch(RuntimeError):
    pass


class MachineError(ValueError):
    pass


# ----------------------------------------------------------------------------
# Small builders


def _v(name: str) -> Var:
    return Var(Name(name))


def _lams(names: Sequence[str], body: Term) -> Term:
    for n in reversed(names):
        body = Abs(Name(n), body)
    return body


def _app(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


def _xs(n: int) -> List[str]:
    return [f"x{i}" for i in range(1, n + 1)]


def encode_element(i: int, n: int) -> Term:
    """The selector λx1...λxn.xi (1-based)."""
    if not 1 <= i <= n:
        raise IndexError(f"element {i} out of range 1..{n}")
    xs = _xs(n)
    return _lams(xs, _v(xs[i - 1]))


def encode_symbol(a: str, sigma: Sequence[str]) -> Term:
    return encode_element(_index(a, sigma), len(sigma))


def _index(a: str, sigma: Sequence[str]) -> int:
    try:
        return list(sigma).index(a) + 1
    except ValueError:
        raise MachineError(f"symbol {a!r} is not in the alphabet {list(sigma)}") from None


def encode_string(s: Sequence[str], sigma: Sequence[str]) -> Term:
    """Scott encoding: ε is λx1..xn.λy.y and a_i r is λx1..xn.λy.xi ⌈r⌉."""
    xs = _xs(len(sigma))
    out = _lams(xs + ["y"], _v("y"))
    for a in reversed(list(s)):
        i = _index(a, sigma)
        out = _lams(xs + ["y"], App(_v(xs[i - 1]), out))
    return out


def decode_string(t: Term, sigma: Sequence[str]) -> str:
    n = len(sigma)
    out = []
    while True:
        binders = []
        body = t
        for _ in range(n + 1):
            if not isinstance(body, Abs):
                raise NotAScottString("expected an abstraction for every symbol and the end marker")
            binders.append(body.binder)
            body = body.body
        if len(set(binders)) != len(binders):
            raise NotAScottString("shadowed binders in a string encoding")
        if isinstance(body, Var) and body.name == binders[-1]:
            return "".join(out)
        if not (isinstance(body, App) and isinstance(body.fun, Var)):
            raise NotAScottString("body is neither the end marker nor a symbol application")
        name = body.fun.name
        if name not in binders[:-1]:
            raise NotAScottString("head variable is not one of the symbol binders")
        out.append(sigma[binders.index(name)])
        if binders[-1] in body.arg.fv or any(b in body.arg.fv for b in binders):
            raise NotAScottString("the tail of a string must be closed")
        t = body.arg


def decode_element(t: Term, n: int) -> int:
    binders = []
    for _ in range(n):
        if not isinstance(t, Abs):
            raise NotAScottString("not a selector")
        binders.append(t.binder)
        t = t.body
    if not isinstance(t, Var) or t.name not in binders:
        raise NotAScottString("not a selector")
    return len(binders) - binders[::-1].index(t.name)


def forget(s: str, delta: Sequence[str]) -> str:
    """Drop every character outside ``delta``."""
    keep = set(delta)
    return "".join(c for c in s if c in keep)


# ----------------------------------------------------------------------------
# Recursion


def fixpoint_H() -> Term:
    """H = t t with t = λx.λy.y (x x y); H u reduces to u (H u) in two head steps."""
    t = _lams(["x", "y"], App(_v("y"), _app(_v("x"), _v("x"), _v("y"))))
    return App(t, t)


def _recursive(body_of, fixpoint: str) -> Term:
    """Close ``body_of(self_ref)`` under recursion.

    With ``fixpoint="H"`` the result is H (λx.body) and ``self_ref`` is x.
    With ``fixpoint="self"`` the result is G G with G = λx.body and
    ``self_ref`` is x x, which unrolls in one step instead of three.
    """
    if fixpoint == "H":
        return App(fixpoint_H(), Abs(Name("x"), body_of(_v("x"))))
    if fixpoint == "self":
        g = Abs(Name("x"), body_of(App(_v("x"), _v("x"))))
        return App(g, g)
    raise ValueError(f"unknown fixpoint style {fixpoint!r}")


# ----------------------------------------------------------------------------
# String combinators


def append_char_term(sigma: Sequence[str]) -> Term:
    """AC(Σ) = λy.λa.λu. a M1 ... Mn u y, with Mi = λu.λy.y (λx1..xn.λw. xi u)."""
    n = len(sigma)
    xs = _xs(n)
    ms = [
        _lams(["u", "y"], App(_v("y"), _lams(xs + ["w"], App(_v(xs[i]), _v("u")))))
        for i in range(n)
    ]
    return _lams(["y", "a", "u"], _app(_v("a"), *ms, _v("u"), _v("y")))


def append_char_steps(sigma: Sequence[str]) -> int:
    return len(sigma) + 5


def convert_string_term(sigma: Sequence[str], delta: Sequence[str], fixpoint: str = "self") -> Term:
    """CS(Σ,Δ): re-encode a Σ-string over Δ, dropping characters outside Δ."""
    ac = append_char_term(delta)
    eps = encode_string("", delta)

    def body(rec: Term) -> Term:
        ns = []
        for a in sigma:
            if a in delta:
                k = Abs(Name("u"), _app(ac, _v("z"), encode_symbol(a, delta), _v("u")))
            else:
                k = Abs(Name("u"), App(_v("z"), _v("u")))
            ns.append(_lams(["u", "z"], _app(rec, k, _v("u"))))
        end = Abs(Name("z"), App(_v("z"), eps))
        return _lams(["z", "u"], _app(_v("u"), *ns, end, _v("z")))

    return _recursive(body, fixpoint)


def convert_string_bound(sigma: Sequence[str], delta: Sequence[str], length: int) -> int:
    """Step budget length·(|Σ| + n_AC + 7) + |Σ| + 5 with n_AC the cost of appending over Δ."""
    n_ac = append_char_steps(delta)
    return length * (len(sigma) + n_ac + 7) + len(sigma) + 5


# ----------------------------------------------------------------------------
# Machines


@dataclass
class TMachine:
    sigma: List[str]
    blank: str
    states: List[str]
    initial: str
    final: str
    delta: Dict[Tuple[str, str], Tuple[str, str, str]]
    name: str = "machine"
    input_alphabet: Optional[List[str]] = None

    def default_delta(self) -> List[str]:
        if self.input_alphabet is not None:
            return list(self.input_alphabet)
        return [a for a in self.sigma if a != self.blank]

    def __post_init__(self):
        if self.blank not in self.sigma:
            raise MachineError("the blank symbol must belong to the alphabet")
        if len(set(self.sigma)) != len(self.sigma) or len(set(self.states)) != len(self.states):
            raise MachineError("duplicate symbols or states")
        for q in (self.initial, self.final):
            if q not in self.states:
                raise MachineError(f"unknown state {q!r}")
        for q in self.states:
            for a in self.sigma:
                defined = (q, a) in self.delta
                if defined == (q == self.final):
                    raise MachineError(
                        f"transition on ({q!r}, {a!r}) must be defined exactly when the state is not final"
                    )
        for (q, a), (q2, b, mv) in self.delta.items():
            if q2 not in self.states or b not in self.sigma or mv not in MOVES:
                raise MachineError(f"bad transition on ({q!r}, {a!r})")

    @classmethod
    def from_json(cls, data: dict, name: str = "machine") -> "TMachine":
        delta = {}
        for entry in data["delta"]:
            q, a = entry["from"]
            q2, b, mv = entry["to"]
            delta[(q, a)] = (q2, b, mv)
        return cls(
            list(data["sigma"]),
            data["blank"],
            list(data["states"]),
            data["initial"],
            data["final"],
            delta,
            data.get("name", name),
            data.get("input_alphabet"),
        )

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "sigma": self.sigma,
            "blank": self.blank,
            "states": self.states,
            "initial": self.initial,
            "final": self.final,
            "delta": [{"from": [q, a], "to": list(v)} for (q, a), v in self.delta.items()],
        }
        if self.input_alphabet is not None:
            out["input_alphabet"] = list(self.input_alphabet)
        return out


def load_machine(path: str) -> TMachine:
    with open(path, encoding="utf-8") as fh:
        return TMachine.from_json(json.load(fh))


@dataclass
class TMConfig:
    left: str  # stored reversed: left[0] is the cell next to the head
    head: str
    right: str
    state: str


def tm_step(m: TMachine, c: TMConfig) -> TMConfig:
    q2, b, mv = m.delta[(c.state, c.head)]
    if mv == "S":
        return TMConfig(c.left, b, c.right, q2)
    if mv == "L":
        if c.left:
            return TMConfig(c.left[1:], c.left[0], b + c.right, q2)
        return TMConfig("", m.blank, b + c.right, q2)
    if c.right:
        return TMConfig(b + c.left, c.right[0], c.right[1:], q2)
    return TMConfig(b + c.left, m.blank, "", q2)


def tm_run(m: TMachine, u: str, max_steps: int = 10**6) -> Tuple[str, int]:
    """Direct simulation from (ε, blank, u, initial); returns the right tape without trailing blanks."""
    if m.blank in u:
        raise MachineError("the input must not contain the blank symbol")
    for c in u:
        if c not in m.sigma:
            raise MachineError(f"symbol {c!r} is not in the alphabet")
    c = TMConfig("", m.blank, u, m.initial)
    g = 0
    while c.state != m.final:
        if g >= max_steps:
            raise StepLimitExceeded(None, None, max_steps)
        c = tm_step(m, c)
        g += 1
    return c.right.rstrip(m.blank), g


def tm_final_config(m: TMachine, u: str, max_steps: int = 10**6) -> TMConfig:
    c = TMConfig("", m.blank, u, m.initial)
    for _ in range(max_steps):
        if c.state == m.final:
            return c
        c = tm_step(m, c)
    raise StepLimitExceeded(None, None, max_steps)


def encode_config(m: TMachine, c: TMConfig) -> Term:
    """λx. x ⌈u^r⌉ ⌈a⌉ ⌈v⌉ ⌈q⌉."""
    return Abs(
        Name("x"),
        _app(
            _v("x"),
            encode_string(c.left, m.sigma),
            encode_symbol(c.head, m.sigma),
            encode_string(c.right, m.sigma),
            encode_element(m.states.index(c.state) + 1, len(m.states)),
        ),
    )


def decode_config(m: TMachine, t: Term) -> TMConfig:
    if not (isinstance(t, Abs)):
        raise NotAScottString("a configuration is an abstraction")
    x = t.binder
    args = []
    body = t.body
    while isinstance(body, App):
        args.append(body.arg)
        body = body.fun
    if not (isinstance(body, Var) and body.name == x and len(args) == 4):
        raise NotAScottString("a configuration applies its binder to four components")
    q, v, a, left = args
    return TMConfig(
        decode_string(left, m.sigma),
        m.sigma[decode_element(a, len(m.sigma)) - 1],
        decode_string(v, m.sigma),
        m.states[decode_element(q, len(m.states)) - 1],
    )


def _state(m: TMachine, q: str) -> Term:
    return encode_element(m.states.index(q) + 1, len(m.states))


def _config(x: str, parts: Sequence[Term]) -> Term:
    return Abs(Name(x), _app(_v(x), *parts))


def init_term(m: TMachine, delta: Sequence[str], fixpoint: str = "self") -> Term:
    """I(M,Δ) = λx.λu. CS(Δ,Σ) (λz. x (λy. y ⌈ε⌉ ⌈blank⌉ z ⌈q_init⌉)) u."""
    cs = convert_string_term(delta, m.sigma, fixpoint)
    conf = _config(
        "y",
        [encode_string("", m.sigma), encode_symbol(m.blank, m.sigma), _v("z"), _state(m, m.initial)],
    )
    return _lams(["x", "u"], _app(cs, Abs(Name("z"), App(_v("x"), conf)), _v("u")))


def final_term(m: TMachine, delta: Sequence[str], fixpoint: str = "self") -> Term:
    """F(M,Δ) = λx.λy. y (λv.λa.λu.λq. CS(Σ,Δ) x u)."""
    cs = convert_string_term(m.sigma, delta, fixpoint)
    return _lams(["x", "y"], App(_v("y"), _lams(["v", "a", "u", "q"], _app(cs, _v("x"), _v("u")))))


def transition_term(m: TMachine, fixpoint: str = "H") -> Term:
    """T(M): case analysis on state and symbol, then one machine step, then recursion."""
    sigma = m.sigma
    ac = append_char_term(sigma)

    def sym(a: str) -> Term:
        return encode_symbol(a, sigma)

    def body(rec: Term) -> Term:
        def call(parts: Sequence[Term]) -> Term:
            # rec z ⌈config⌉
            return _app(rec, _v("z"), _config("x", parts))

        def left_family(q2: str, b: str) -> List[Term]:
            ps = [
                _lams(
                    ["u", "v", "z"],
                    _app(ac, Abs(Name("w"), call([_v("u"), sym(a), _v("w"), _state(m, q2)])), sym(b), _v("v")),
                )
                for a in sigma
            ]
            ps.append(
                _lams(
                    ["v", "z"],
                    _app(
                        ac,
                        Abs(Name("w"), call([encode_string("", sigma), sym(m.blank), _v("w"), _state(m, q2)])),
                        sym(b),
                        _v("v"),
                    ),
                )
            )
            return ps

        def right_family(q2: str, b: str) -> List[Term]:
            rs = [
                _lams(
                    ["v", "u", "z"],
                    _app(ac, Abs(Name("w"), call([_v("w"), sym(a), _v("v"), _state(m, q2)])), sym(b), _v("u")),
                )
                for a in sigma
            ]
            rs.append(
                _lams(
                    ["u", "z"],
                    _app(
                        ac,
                        Abs(Name("w"), call([_v("w"), sym(m.blank), encode_string("", sigma), _state(m, q2)])),
                        sym(b),
                        _v("u"),
                    ),
                )
            )
            return rs

        def case(q: str, a: str) -> Term:
            if q == m.final:
                return _lams(
                    ["u", "v", "z"], App(_v("z"), _config("x", [_v("u"), sym(a), _v("v"), _state(m, q)]))
                )
            q2, b, mv = m.delta[(q, a)]
            if mv == "S":
                return _lams(["u", "v", "z"], call([_v("u"), sym(b), _v("v"), _state(m, q2)]))
            if mv == "L":
                return _lams(["u", "v", "z"], _app(_v("u"), *left_family(q2, b), _v("v"), _v("z")))
            return _lams(["u", "v", "z"], _app(_v("v"), *right_family(q2, b), _v("u"), _v("z")))

        ms = [
            _lams(["u", "a", "v", "z"], _app(_v("a"), *[case(q, a) for a in sigma], _v("u"), _v("v"), _v("z")))
            for q in m.states
        ]
        selector = _lams(["u", "a", "v", "q"], _app(_v("q"), *ms, _v("u"), _v("a"), _v("v"), _v("z")))
        return _lams(["z", "y"], App(_v("y"), selector))

    return _recursive(body, fixpoint)


def machine_term(m: TMachine, delta: Sequence[str], fixpoint: str = "self") -> Term:
    """U(M,Δ) = λu. I(M,Δ) (λx. T(M) (λy. F(M,Δ) (λw.w) y) x) u."""
    delta = list(delta)
    if m.blank in delta:
        raise MachineError("the input alphabet must not contain the blank symbol")
    for a in delta:
        if a not in m.sigma:
            raise MachineError(f"input symbol {a!r} is not in the machine alphabet")
    ident = Abs(Name("w"), _v("w"))
    k_final = Abs(Name("y"), _app(final_term(m, delta, fixpoint), ident, _v("y")))
    k_init = Abs(Name("x"), _app(transition_term(m), k_final, _v("x")))
    return Abs(Name("u"), _app(init_term(m, delta, fixpoint), k_init, _v("u")))


# ----------------------------------------------------------------------------
# Running


@dataclass
class EncodedRun:
    output: str
    steps: int
    mult: int
    expected: str
    g: int
    stats: Optional[object] = None
    certified: Optional[bool] = None


def run_encoded(
    m: TMachine,
    delta: Sequence[str],
    u: str,
    engine: str = "head",
    max_steps: int = 10**7,
    term: Optional[Term] = None,
) -> EncodedRun:
    """Run U(M,Δ) ⌈u⌉ under head or linear head reduction and check it against the simulator."""
    from .measure import stats_from_rules
    from .unfoldcheck import unfold_eq

    expected_raw, g = tm_run(m, u)
    expected = forget(expected_raw, delta)
    if term is None:
        term = machine_term(m, delta)
    start = App(term, encode_string(u, delta))
    if engine == "head":
        nf, steps, mult = count_steps(start, HEAD, Policy.LeftmostOutermost, max_steps)
        try:
            out = decode_string(nf, delta)
        except NotAScottString as e:
            raise DecodeMismatch(f"head normal form is not a string: {e}") from None
        if out != expected:
            raise DecodeMismatch(f"encoded run gave {out!r}, simulator gave {expected!r}")
        return EncodedRun(out, steps, steps, expected, g)
    if engine == "linear-head":
        nf, trace = normalize(start, LINEAR_HEAD, Policy.LeftmostOutermost, max_steps)
        stats = stats_from_rules(trace.rules())
        certified = unfold_eq(nf, encode_string(expected, delta))
        if not certified:
            raise DecodeMismatch("linear head normal form does not unfold to the expected string")
        out = decode_string(unfold(nf), delta)
        if out != expected:
            raise DecodeMismatch(f"encoded run gave {out!r}, simulator gave {expected!r}")
        return EncodedRun(out, len(trace), stats.mult, expected, g, stats, certified)
    raise ValueError(f"unknown engine {engine!r}")


# ----------------------------------------------------------------------------
# The test machine suite


def _total(sigma, states, final, rules, default=None) -> Dict[Tuple[str, str], Tuple[str, str, str]]:
    """Complete a partial table: undefined non-final entries halt in place."""
    delta = dict(rules)
    for q in states:
        if q == final:
            continue
        for a in sigma:
            delta.setdefault((q, a), (final, a, "S"))
    return delta


def minimal_machine() -> TMachine:
    sigma = ["_", "0", "1"]
    states = ["init", "final"]
    return TMachine(sigma, "_", states, "init", "final", _total(sigma, states, "final", {}), "minimal")


def bit_flip_machine() -> TMachine:
    sigma = ["_", "0", "1"]
    states = ["init", "scan", "back", "final"]
    rules = {
        ("init", "_"): ("scan", "_", "R"),
        ("scan", "0"): ("scan", "1", "R"),
        ("scan", "1"): ("scan", "0", "R"),
        ("scan", "_"): ("back", "_", "L"),
        ("back", "0"): ("back", "0", "L"),
        ("back", "1"): ("back", "1", "L"),
        ("back", "_"): ("final", "_", "S"),
    }
    return TMachine(sigma, "_", states, "init", "final", _total(sigma, states, "final", rules), "bit-flip")


def unary_successor_machine() -> TMachine:
    sigma = ["_", "1"]
    states = ["init", "scan", "back", "final"]
    rules = {
        ("init", "_"): ("scan", "_", "R"),
        ("scan", "1"): ("scan", "1", "R"),
        ("scan", "_"): ("back", "1", "L"),
        ("back", "1"): ("back", "1", "L"),
        ("back", "_"): ("final", "_", "S"),
    }
    return TMachine(sigma, "_", states, "init", "final", _total(sigma, states, "final", rules), "successor")


def palindrome_machine() -> TMachine:
    """Over {0,1}: outputs "1" for palindromes and "0" otherwise; erased cells become x."""
    sigma = ["_", "0", "1", "x"]
    states = [
        "init", "start", "carry0", "carry1", "check0", "check1", "return",
        "accept", "accept_write", "reject", "reject_write", "done", "final",
    ]
    rules = {("init", "_"): ("start", "_", "R")}
    rules[("start", "0")] = ("carry0", "x", "R")
    rules[("start", "1")] = ("carry1", "x", "R")
    rules[("start", "x")] = ("accept", "x", "L")
    rules[("start", "_")] = ("accept", "_", "L")
    for c in "01":
        for a in "01":
            rules[(f"carry{c}", a)] = (f"carry{c}", a, "R")
        for a in "x_":
            rules[(f"carry{c}", a)] = (f"check{c}", a, "L")
        other = "1" if c == "0" else "0"
        rules[(f"check{c}", c)] = ("return", "x", "L")
        rules[(f"check{c}", other)] = ("reject", other, "S")
        rules[(f"check{c}", "x")] = ("accept", "x", "L")
    rules[("return", "0")] = ("return", "0", "L")
    rules[("return", "1")] = ("return", "1", "L")
    rules[("return", "x")] = ("start", "x", "R")
    rules[("accept", "x")] = ("accept", "x", "L")
    rules[("accept", "_")] = ("accept_write", "_", "R")
    rules[("accept_write", "x")] = ("done", "1", "L")
    rules[("accept_write", "_")] = ("done", "1", "L")
    for a in "01":
        rules[("reject", a)] = ("reject", "x", "L")
    rules[("reject", "x")] = ("reject", "x", "L")
    rules[("reject", "_")] = ("reject_write", "_", "R")
    rules[("reject_write", "x")] = ("done", "0", "L")
    rules[("done", "_")] = ("final", "_", "S")
    return TMachine(sigma, "_", states, "init", "final", _total(sigma, states, "final", rules), "palindrome", ["0", "1"])


TEST_MACHINES = {
    "minimal": (minimal_machine, ["0", "1"]),
    "bit-flip": (bit_flip_machine, ["0", "1"]),
    "successor": (unary_successor_machine, ["1"]),
    "palindrome": (palindrome_machine, ["0", "1"]),
}
