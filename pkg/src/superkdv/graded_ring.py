"""Z2-graded differential polynomial rings over jet generators.

A monomial is a sorted tuple of symbols. Symbols are plain tuples so that
sorting and hashing stay cheap:

    (0, i)                      parameter number i of the signature
    (1, f, k)                   D^k f (N=1) or d^k f (N=0)
    (1, f, a, b, k)             D1^a D2^b d^k f (N=2)
    (2, level, text, kind)      nonlocal antiderivative generator

Parameters sort first, then jets by field index and derivative multi-index,
then nonlocal generators. Transposing two odd symbols flips the sign.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

EVEN, ODD = 0, 1


class SignatureError(ValueError):
    """Symbol or operation does not belong to the ring signature."""


class GradedSubstitutionError(ValueError):
    """Substitution value has the wrong parity for its field."""


@dataclass(frozen=True)
class FieldSpec:
    name: str
    parity: int
    degree: Fraction


@dataclass(frozen=True)
class ParamSpec:
    name: str
    parity: int
    degree: Fraction


@dataclass(frozen=True)
class NonlocalGenerator:
    """Formal antiderivative D^{-1}(density) or d^{-1}(density)."""

    symbol: tuple
    density: "DiffPoly"
    kind: str  # "D" or "dx"
    parity: int
    degree: Fraction

    @property
    def name(self):
        return self.symbol[2]


class Signature:
    """Field and parameter content of a graded differential polynomial ring.

    ``susy`` is the number of supersymmetries (0, 1 or 2) and fixes the shape
    of the derivative multi-index on jets.
    """

    def __init__(self, susy: int, fields: Iterable, params: Iterable = (), label: str = ""):
        if susy not in (0, 1, 2):
            raise SignatureError(f"susy must be 0, 1 or 2, got {susy}")
        self.susy = susy
        self.fields = tuple(_spec(FieldSpec, f) for f in fields)
        self.params = tuple(_spec(ParamSpec, p) for p in params)
        self.label = label or f"N={susy}"
        self.field_index = {f.name: i for i, f in enumerate(self.fields)}
        self.param_index = {p.name: i for i, p in enumerate(self.params)}
        if set(self.field_index) & set(self.param_index):
            raise SignatureError("field and parameter names must be distinct")
        self.nonlocal_gens: dict[tuple, NonlocalGenerator] = {}
        self._odd: dict[tuple, bool] = {}
        self._deg: dict[tuple, Fraction] = {}
        self.derive_cache: dict = {}

    def __repr__(self):
        names = ", ".join(f.name for f in self.fields)
        return f"Signature({self.label}: {names})"

    # symbols ---------------------------------------------------------------

    def jet_symbol(self, field: str, d=0) -> tuple:
        try:
            fi = self.field_index[field]
        except KeyError:
            raise SignatureError(f"unknown field {field!r} in {self.label}") from None
        if self.susy == 2:
            a, b, k = (0, 0, d) if isinstance(d, int) else d
            if a not in (0, 1) or b not in (0, 1) or k < 0:
                raise SignatureError(f"bad N=2 multi-index {(a, b, k)}")
            return (1, fi, a, b, k)
        if not isinstance(d, int) or d < 0:
            raise SignatureError(f"bad derivative order {d!r}")
        return (1, fi, d)

    def param_symbol(self, name: str) -> tuple:
        try:
            return (0, self.param_index[name])
        except KeyError:
            raise SignatureError(f"unknown parameter {name!r} in {self.label}") from None

    def check_symbol(self, s: tuple) -> None:
        ok = False
        if s[0] == 0:
            ok = len(s) == 2 and 0 <= s[1] < len(self.params)
        elif s[0] == 1:
            ok = 0 <= s[1] < len(self.fields) and len(s) == (5 if self.susy == 2 else 3)
        elif s[0] == 2:
            ok = s in self.nonlocal_gens
        if not ok:
            raise SignatureError(f"symbol {s!r} does not belong to {self.label}")

    def is_odd(self, s: tuple) -> bool:
        r = self._odd.get(s)
        if r is None:
            r = self._parity(s) == ODD
            self._odd[s] = r
        return r

    def _parity(self, s):
        if s[0] == 0:
            return self.params[s[1]].parity
        if s[0] == 1:
            p = self.fields[s[1]].parity
            if self.susy == 1:
                p += s[2]
            elif self.susy == 2:
                p += s[2] + s[3]
            return p % 2
        return self.nonlocal_gens[s].parity

    def symbol_degree(self, s: tuple) -> Fraction:
        r = self._deg.get(s)
        if r is None:
            if s[0] == 0:
                r = self.params[s[1]].degree
            elif s[0] == 1:
                base = self.fields[s[1]].degree
                if self.susy == 1:
                    r = base + Fraction(s[2], 2)
                elif self.susy == 2:
                    r = base + Fraction(s[2] + s[3], 2) + s[4]
                else:
                    r = base + s[2]
            else:
                r = self.nonlocal_gens[s].degree
            self._deg[s] = r
        return r

    def symbol_field(self, s: tuple) -> str | None:
        return self.fields[s[1]].name if s[0] == 1 else None

    # convenience constructors ---------------------------------------------

    def jet(self, field: str, d=0) -> "DiffPoly":
        return DiffPoly(self, {(self.jet_symbol(field, d),): Fraction(1)})

    def field(self, name: str) -> "DiffPoly":
        return self.jet(name, 0)

    def param(self, name: str) -> "DiffPoly":
        return DiffPoly(self, {(self.param_symbol(name),): Fraction(1)})

    def const(self, c) -> "DiffPoly":
        c = Fraction(c)
        return DiffPoly(self, {(): c} if c else {})

    def zero(self) -> "DiffPoly":
        return DiffPoly(self, {})

    def one(self) -> "DiffPoly":
        return self.const(1)

    def __getitem__(self, name):
        if name in self.field_index:
            return self.field(name)
        return self.param(name)


def _spec(cls, item):
    if isinstance(item, cls):
        return item
    name, parity, degree = item
    parity = {"even": EVEN, "odd": ODD}.get(parity, parity)
    return cls(name, int(parity), Fraction(degree))


# monomial arithmetic -------------------------------------------------------


def normalize(sig: Signature, symbols: Iterable[tuple], coeff=1):
    """Sort ``symbols`` into canonical order with Koszul signs.

    Returns ``(monomial, coefficient)``; a repeated odd symbol gives
    ``((), 0)``.
    """
    syms = list(symbols)
    for s in syms:
        sig.check_symbol(s)
    coeff = Fraction(coeff)
    sign, mono = _sort_signed(sig, syms)
    if sign == 0 or coeff == 0:
        return (), Fraction(0)
    return mono, coeff * sign


def _sort_signed(sig, syms):
    odd = [s for s in syms if sig.is_odd(s)]
    sign = 1
    if len(odd) > 1:
        # parity of the permutation sorting the odd subsequence
        inv = 0
        for i in range(len(odd)):
            oi = odd[i]
            for j in range(i + 1, len(odd)):
                if odd[j] < oi:
                    inv += 1
                elif odd[j] == oi:
                    return 0, ()
        if inv & 1:
            sign = -1
    return sign, tuple(sorted(syms))


def mono_mul(sig: Signature, m1: tuple, m2: tuple):
    """Product of two normalized monomials as ``(sign, monomial)``; sign 0 if it vanishes."""
    if not m1:
        return 1, m2
    if not m2:
        return 1, m1
    is_odd = sig.is_odd
    o2 = [s for s in m2 if is_odd(s)]
    inv = 0
    if o2:
        for s in m1:
            if is_odd(s):
                lo = bisect_left(o2, s)
                if lo < len(o2) and o2[lo] == s:
                    return 0, ()
                # odd symbols of m2 that must jump over s
                inv += lo
    return (-1 if inv & 1 else 1), tuple(sorted(m1 + m2))


def mono_parity(sig: Signature, m: tuple) -> int:
    return sum(1 for s in m if sig.is_odd(s)) & 1


def mono_degree(sig: Signature, m: tuple) -> Fraction:
    return sum((sig.symbol_degree(s) for s in m), Fraction(0))


# polynomials ---------------------------------------------------------------


class DiffPoly:
    """Exact rational linear combination of normalized graded monomials.

    Instances are treated as immutable; ``terms`` must not be modified after
    construction.
    """

    __slots__ = ("sig", "terms", "_hash")

    def __init__(self, sig: Signature, terms: Mapping | None = None):
        self.sig = sig
        self.terms = {} if terms is None else {m: c for m, c in terms.items() if c}
        self._hash = None

    @classmethod
    def from_raw(cls, sig: Signature, raw: Iterable):
        """Build from ``(symbol list, coefficient)`` pairs, normalizing each."""
        acc: dict = {}
        for syms, c in raw:
            m, c = normalize(sig, syms, c)
            if c:
                acc[m] = acc.get(m, 0) + c
        return cls(sig, acc)

    # algebra -------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, DiffPoly):
            if other.sig is not self.sig:
                raise SignatureError(f"signature mismatch: {self.sig} vs {other.sig}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.sig.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.terms:
            return self
        acc = dict(self.terms)
        for m, c in other.terms.items():
            acc[m] = acc.get(m, 0) + c
        return DiffPoly(self.sig, acc)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly(self.sig, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "DiffPoly":
        c = Fraction(c)
        if c == 0:
            return DiffPoly(self.sig, {})
        return DiffPoly(self.sig, {m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only natural powers are supported")
        out = self.sig.one()
        for _ in range(n):
            out = out * self
        return out

    # comparison ----------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.sig.const(other)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self.sig is other.sig and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # grading -------------------------------------------------------------

    @property
    def parity(self):
        """0 or 1 for homogeneous polynomials, ``None`` for zero, ``"mixed"`` otherwise."""
        ps = {mono_parity(self.sig, m) for m in self.terms}
        if not ps:
            return None
        if len(ps) > 1:
            return "mixed"
        return ps.pop()

    def degrees(self) -> set:
        return {mono_degree(self.sig, m) for m in self.terms}

    @property
    def degree(self):
        ds = self.degrees()
        if len(ds) == 1:
            return ds.pop()
        return None if not ds else "mixed"

    def symbols(self) -> set:
        return {s for m in self.terms for s in m}

    def fields(self) -> set:
        return {self.sig.fields[s[1]].name for s in self.symbols() if s[0] == 1}

    def has_nonlocal(self) -> bool:
        return any(s[0] == 2 for s in self.symbols())

    def coefficient(self, mono: tuple) -> Fraction:
        return self.terms.get(mono, Fraction(0))

    def __repr__(self):
        from .render import render_poly

        return f"DiffPoly({render_poly(self)})"

    def __str__(self):
        from .render import render_poly

        return render_poly(self)

    # parameter handling --------------------------------------------------

    def split_params(self) -> dict:
        """Group terms by their parameter prefix: {param monomial: param-free DiffPoly}."""
        out: dict = {}
        for m, c in self.terms.items():
            i = 0
            while i < len(m) and m[i][0] == 0:
                i += 1
            out.setdefault(m[:i], {})[m[i:]] = c
        return {k: DiffPoly(self.sig, v) for k, v in out.items()}

    def param_coefficients(self, name: str) -> dict:
        """Coefficients of powers of an even parameter: {power: DiffPoly}."""
        ps = self.sig.param_symbol(name)
        if self.sig.is_odd(ps):
            raise SignatureError("param_coefficients needs an even parameter")
        out: dict = {}
        for m, c in self.terms.items():
            n = m.count(ps)
            rest = tuple(s for s in m if s != ps)
            out.setdefault(n, {})[rest] = c
        return {k: DiffPoly(self.sig, v) for k, v in sorted(out.items())}

    def set_param(self, name: str, value) -> "DiffPoly":
        """Specialize an even parameter to a rational value."""
        ps = self.sig.param_symbol(name)
        value = Fraction(value)
        acc: dict = {}
        for m, c in self.terms.items():
            n = m.count(ps)
            if n and value == 0:
                continue
            rest = tuple(s for s in m if s != ps)
            acc[rest] = acc.get(rest, 0) + c * value**n
        return DiffPoly(self.sig, acc)


def multiply(p: DiffPoly, q: DiffPoly) -> DiffPoly:
    """Graded-commutative product."""
    if p.sig is not q.sig:
        raise SignatureError(f"signature mismatch: {p.sig} vs {q.sig}")
    sig = p.sig
    acc: dict = {}
    for m1, c1 in p.terms.items():
        for m2, c2 in q.terms.items():
            sign, m = mono_mul(sig, m1, m2)
            if sign:
                v = acc.get(m, 0) + (c1 * c2 if sign > 0 else -(c1 * c2))
                acc[m] = v
    return DiffPoly(sig, acc)


def product(factors: Iterable[DiffPoly], sig: Signature | None = None) -> DiffPoly:
    out = None
    for f in factors:
        out = f if out is None else out * f
    if out is None:
        if sig is None:
            raise ValueError("empty product needs a signature")
        return sig.one()
    return out


def substitute(p: DiffPoly, assignment: Mapping[str, DiffPoly], target: Signature | None = None) -> DiffPoly:
    """Replace every jet of an assigned field by the same derivative of its image.

    ``target`` is the signature of the images (defaults to ``p.sig``).
    Unassigned fields are an error; parameters are carried over by name.
    """
    from .calculus import derive_word, jet_word

    sig = p.sig
    target = target or sig
    for name, val in assignment.items():
        f = sig.fields[sig.field_index[name]] if name in sig.field_index else None
        if f is None:
            raise SignatureError(f"unknown field {name!r}")
        vp = val.parity
        if vp not in (None, f.parity):
            raise GradedSubstitutionError(f"image of {name} has parity {vp}, field has {f.parity}")
    jet_cache: dict = {}

    def image(s):
        if s[0] == 0:
            return target.param(sig.params[s[1]].name)
        if s[0] == 2:
            raise SignatureError("substitution into nonlocal generators is not supported")
        name = sig.fields[s[1]].name
        if name not in assignment:
            raise SignatureError(f"no assignment for field {name!r}")
        r = jet_cache.get(s)
        if r is None:
            r = derive_word(assignment[name], jet_word(sig, s))
            jet_cache[s] = r
        return r

    out = target.zero()
    for m, c in p.terms.items():
        term = target.const(c)
        for s in m:
            term = term * image(s)
        out = out + term
    return out
