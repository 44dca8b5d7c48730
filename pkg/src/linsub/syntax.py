"""Concrete syntax: a recursive-descent parser and a minimal-paren printer.

Grammar::

    term  := lam | app
    lam   := ('\\' | 'λ') IDENT '.' term
    app   := atom+ [lam]
    atom  := IDENT | '(' term ')' | atom '[' IDENT '/' term ']'

Identifiers may carry a ``#<digits>`` tag; ``--`` starts a comment.
"""

import re
from typing import List, Tuple

from .terms import Abs, App, Name, Sub, Term, Var, make_name


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<ident>[A-Za-z][A-Za-z0-9_']*(?:\#[0-9]+)?)
  | (?P<lam>\\|λ)
  | (?P<punct>[.()\[\]/])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> List[Tuple[str, str, int, int]]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            tokens.append((kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, tok=None):
        tok = tok or self.peek()
        found = tok[1] or "end of input"
        raise ParseError(f"{message}, found {found!r}", tok[2], tok[3])

    def expect(self, value: str):
        tok = self.peek()
        if tok[1] != value or tok[0] not in ("punct", "lam"):
            self.fail(f"expected {value!r}")
        return self.advance()

    def ident(self) -> Name:
        tok = self.peek()
        if tok[0] != "ident":
            self.fail("expected an identifier")
        self.advance()
        return make_name(tok[1])

    def term(self) -> Term:
        # binders of nested lambdas are collected first so deep bodies do not recurse
        binders = []
        while self.peek()[0] == "lam":
            self.advance()
            binders.append(self.ident())
            self.expect(".")
        body = self.app()
        for b in reversed(binders):
            body = Abs(b, body)
        return body

    def starts_atom(self) -> bool:
        kind, value = self.peek()[:2]
        return kind == "ident" or value == "("

    def app(self) -> Term:
        if not self.starts_atom():
            if self.peek()[0] == "lam":
                return self.term()
            self.fail("expected a term")
        t = self.atom()
        while True:
            if self.starts_atom():
                t = App(t, self.atom())
            elif self.peek()[0] == "lam":
                # a trailing abstraction extends as far right as possible
                return App(t, self.term())
            else:
                return t

    def atom(self) -> Term:
        tok = self.peek()
        if tok[0] == "ident":
            t: Term = Var(self.ident())
        elif tok[1] == "(":
            self.advance()
            t = self.term()
            self.expect(")")
        else:
            self.fail("expected a term")
        while self.peek()[1] == "[" and self.peek()[0] == "punct":
            self.advance()
            x = self.ident()
            self.expect("/")
            u = self.term()
            self.expect("]")
            t = Sub(t, x, u)
        return t


def parse(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if p.peek()[0] != "eof":
        p.fail("unexpected trailing input")
    return t


# ----------------------------------------------------------------------------
# Printing


def show(t: Term) -> str:
    """Print with as few parentheses as the grammar allows; parse(show(t)) == t."""
    out: List[str] = []
    # work items are either strings to emit or (term, context) pairs
    # context: 'top' (anything goes), 'fun' (left of application),
    # 'arg' (right of application), 'sub' (left of a [x/u] suffix)
    stack: list = [(t, "top", True)]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        s, ctx, last = item
        if _needs_parens(s, ctx, last):
            stack.append(")")
            stack.append((s, "top", True))
            out.append("(")
            continue
        if isinstance(s, Var):
            out.append(str(s.name))
        elif isinstance(s, Abs):
            out.append("\\")
            out.append(str(s.binder))
            out.append(".")
            stack.append((s.body, "top", last))
        elif isinstance(s, App):
            stack.append((s.arg, "arg", last))
            stack.append(" ")
            stack.append((s.fun, "fun", False))
        else:
            stack.append("]")
            stack.append((s.arg, "top", True))
            stack.append(f"[{s.binder}/")
            stack.append((s.body, "sub", False))
    return "".join(out)


def _needs_parens(s: Term, ctx: str, last: bool) -> bool:
    # `last` means nothing follows this term up to the enclosing delimiter,
    # so a trailing abstraction may stay bare
    if isinstance(s, Var):
        return False
    if isinstance(s, Sub):
        return False
    if isinstance(s, Abs):
        if ctx == "top":
            return False
        if ctx == "arg":
            return not last
        return True
    # App
    if ctx == "top" or ctx == "fun":
        return False
    return True
