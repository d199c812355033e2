"""Recursive-descent parser for differential polynomials.

Grammar::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := primary ('^' nat)?
    primary:= rational | symbol | deriv '(' expr ')' | '(' expr ')'
    deriv  := D | D1 | D2 | dx | dx^nat | Dinv | dxinv

Symbols are the field and parameter names of the ambient signature.
``dx^k(...)``, ``Dinv(...)`` and ``dxinv(...)`` are accepted so that every
rendered polynomial (including nonlocal generators) parses back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .calculus import derive
from .graded_ring import DiffPoly, Signature, SignatureError

DERIVATIONS = ("D", "D1", "D2", "dx", "Dinv", "dxinv")


class ParseError(ValueError):
    """Parse failure; ``position`` is 1-based in the source text."""

    kind = "syntax error"

    def __init__(self, msg: str, position: int):
        super().__init__(f"{self.kind} at position {position}: {msg}")
        self.position = position


class UnknownSymbolError(ParseError):
    kind = "unknown symbol"


class ArityError(ParseError):
    kind = "arity error"


# AST -----------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Sym:
    name: str
    pos: int


@dataclass(frozen=True)
class Deriv:
    op: str
    arg: object
    times: int
    pos: int


@dataclass(frozen=True)
class Pow:
    base: object
    exp: int


@dataclass(frozen=True)
class Mul:
    factors: tuple


@dataclass(frozen=True)
class Add:
    terms: tuple  # (sign, node) pairs


# tokens --------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))")


def tokenize(text: str) -> list:
    out = []
    i = 0
    n = len(text)
    while i < n:
        m = _TOKEN.match(text, i)
        if not m or m.end() == i:
            if text[i:].strip() == "":
                break
            j = i + len(text[i:]) - len(text[i:].lstrip())
            raise ParseError(f"unexpected character {text[j]!r}", j + 1)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind) + 1))
        i = m.end()
    out.append(("end", "", len(text) + 1))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def take(self, value=None, kind=None):
        t = self.tok
        if (value is not None and t[1] != value) or (kind is not None and t[0] != kind):
            want = repr(value) if value is not None else kind
            got = "end of input" if t[0] == "end" else repr(t[1])
            raise ParseError(f"expected {want}, found {got}", t[2])
        self.i += 1
        return t

    def at(self, value):
        return self.tok[1] == value and self.tok[0] == "op"

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            raise ParseError(f"unexpected {self.tok[1]!r}", self.tok[2])
        return node

    def expr(self):
        sign = 1
        if self.at("-") or self.at("+"):
            sign = -1 if self.take()[1] == "-" else 1
        terms = [(sign, self.term())]
        while self.at("+") or self.at("-"):
            s = -1 if self.take()[1] == "-" else 1
            terms.append((s, self.term()))
        return terms[0][1] if len(terms) == 1 and sign == 1 else Add(tuple(terms))

    def term(self):
        fs = [self.factor()]
        while self.at("*"):
            self.take()
            fs.append(self.factor())
        return fs[0] if len(fs) == 1 else Mul(tuple(fs))

    def factor(self):
        base = self.primary()
        if self.at("^"):
            self.take()
            return Pow(base, int(self.take(kind="num")[1]))
        return base

    def nat(self):
        return int(self.take(kind="num")[1])

    def primary(self):
        kind, val, pos = self.tok
        if kind == "num":
            self.take()
            num = Fraction(int(val))
            if self.at("/"):
                self.take()
                den = self.nat()
                if den == 0:
                    raise ParseError("zero denominator", self.toks[self.i - 1][2])
                num /= den
            return Num(num)
        if kind == "name":
            self.take()
            if val in DERIVATIONS:
                times = 1
                if val == "dx" and self.at("^"):
                    self.take()
                    times = self.nat()
                if not self.at("("):
                    raise ArityError(f"derivation {val} needs one parenthesized argument", self.tok[2])
                self.take("(")
                if self.at(")"):
                    raise ArityError(f"derivation {val} needs one argument, got none", self.tok[2])
                arg = self.expr()
                if self.at(","):
                    raise ArityError(f"derivation {val} takes one argument", self.tok[2])
                self.take(")")
                return Deriv(val, arg, times, pos)
            return Sym(val, pos)
        if self.at("("):
            self.take()
            node = self.expr()
            self.take(")")
            return node
        got = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"expected an operand, found {got}", pos)


def parse_ast(text: str):
    return _Parser(text).parse()


# elaboration ---------------------------------------------------------------


def elaborate(node, sig: Signature) -> DiffPoly:
    if isinstance(node, Num):
        return sig.const(node.value)
    if isinstance(node, Sym):
        if node.name in sig.field_index:
            return sig.field(node.name)
        try:
            return sig.param(node.name)
        except (KeyError, SignatureError):
            raise UnknownSymbolError(f"{node.name!r} is not a field or parameter of {sig!r}", node.pos) from None
    if isinstance(node, Add):
        acc = sig.zero()
        for s, t in node.terms:
            v = elaborate(t, sig)
            acc = acc + v if s > 0 else acc - v
        return acc
    if isinstance(node, Mul):
        acc = sig.one()
        for f in node.factors:
            acc = acc * elaborate(f, sig)
        return acc
    if isinstance(node, Pow):
        return elaborate(node.base, sig) ** node.exp
    if isinstance(node, Deriv):
        arg = elaborate(node.arg, sig)
        try:
            if node.op in ("Dinv", "dxinv"):
                from .nonlocal_ext import D_inverse, dx_inverse

                inv = D_inverse if node.op == "Dinv" else dx_inverse
                return inv(arg, reduce=False)
            for _ in range(node.times):
                arg = derive(arg, node.op)
            return arg
        except (SignatureError, ValueError) as e:
            raise ArityError(str(e), node.pos) from None
    raise TypeError(f"not an expression node: {node!r}")


def parse(text: str, sig: Signature) -> DiffPoly:
    """Parse ``text`` into a polynomial over ``sig``."""
    return elaborate(parse_ast(text), sig)


__all__ = ["parse", "parse_ast", "elaborate", "tokenize", "ParseError", "UnknownSymbolError", "ArityError"]
