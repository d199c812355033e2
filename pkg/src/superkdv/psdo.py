"""Super pseudodifferential operators for N=1 and N=2.

N=1 operators are series sum_j a_j D^j.  N=2 operators are series in the
normal-ordered basis D1^a D2^b d^k (a, b in {0, 1}, k any integer).  Orders
are counted in D-units throughout: order(D^j) = j, order(D1^a D2^b d^k) =
a + b + 2k.

Every operator carries ``prec``: all orders >= prec are exact, nothing below
is stored.  ``prec=None`` marks an exact finite expression.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .calculus import derive
from .graded_ring import DiffPoly, Signature, SignatureError, mono_parity

DEFAULT_DEPTH = 16


class DepthExhaustedError(ArithmeticError):
    """A requested order lies below the retained truncation depth."""


class RootError(ArithmeticError):
    """The triangular system for an operator root cannot be solved."""


def binom(m: int, i: int) -> Fraction:
    """Generalized binomial coefficient m choose i for any integer m."""
    out = Fraction(1)
    for t in range(i):
        out = out * (m - t) / (t + 1)
    return out


def grade_sign(p: DiffPoly) -> DiffPoly:
    """(-1)^|p| p, applied termwise."""
    sig = p.sig
    return DiffPoly(sig, {m: (-c if mono_parity(sig, m) else c) for m, c in p.terms.items()})


def order_of(susy: int, key) -> int:
    if susy == 1:
        return key
    a, b, k = key
    return a + b + 2 * k


def key_parity(susy: int, key) -> int:
    if susy == 1:
        return key & 1
    return (key[0] + key[1]) & 1


def _min_prec(*ps):
    vals = [p for p in ps if p is not None]
    return min(vals) if vals else None


class SuperOp:
    """Truncated super pseudodifferential operator with DiffPoly coefficients."""

    __slots__ = ("sig", "coeffs", "prec")

    def __init__(self, sig: Signature, coeffs: Mapping, prec: int | None = None):
        if sig.susy not in (1, 2):
            raise SignatureError("super operators need an N=1 or N=2 signature")
        self.sig = sig
        self.coeffs = {k: v for k, v in coeffs.items() if v.terms and (prec is None or order_of(sig.susy, k) >= prec)}
        self.prec = prec

    # construction ----------------------------------------------------------

    @classmethod
    def basis(cls, sig: Signature, key, coeff=None) -> "SuperOp":
        c = sig.one() if coeff is None else coeff
        if sig.susy == 2 and isinstance(key, int):
            key = (0, 0, key)
        return cls(sig, {key: c})

    @classmethod
    def mult(cls, f: DiffPoly) -> "SuperOp":
        """Multiplication operator by f."""
        return cls(f.sig, {0 if f.sig.susy == 1 else (0, 0, 0): f})

    @classmethod
    def zero(cls, sig):
        return cls(sig, {})

    @property
    def susy(self):
        return self.sig.susy

    def order(self, key) -> int:
        return order_of(self.sig.susy, key)

    @property
    def top(self):
        if not self.coeffs:
            return None
        return max(self.order(k) for k in self.coeffs)

    def __getitem__(self, key) -> DiffPoly:
        if self.sig.susy == 2 and isinstance(key, int):
            key = (0, 0, key)
        if self.prec is not None and self.order(key) < self.prec:
            raise DepthExhaustedError(f"order {self.order(key)} is below the retained precision {self.prec}")
        return self.coeffs.get(key, self.sig.zero())

    @property
    def parity(self):
        ps = set()
        for k, v in self.coeffs.items():
            vp = v.parity
            if vp == "mixed":
                return "mixed"
            ps.add((vp + key_parity(self.susy, k)) % 2)
        if not ps:
            return 0
        return ps.pop() if len(ps) == 1 else "mixed"

    # linear structure ------------------------------------------------------

    def _check(self, other):
        if not isinstance(other, SuperOp):
            return False
        if other.sig is not self.sig:
            raise SignatureError("operators live in different signatures")
        return True

    def __add__(self, other):
        if not self._check(other):
            return NotImplemented
        prec = _min_or_max(self.prec, other.prec)
        acc = dict(self.coeffs)
        for k, v in other.coeffs.items():
            acc[k] = acc[k] + v if k in acc else v
        return SuperOp(self.sig, acc, prec)

    def __neg__(self):
        return SuperOp(self.sig, {k: -v for k, v in self.coeffs.items()}, self.prec)

    def __sub__(self, other):
        if not self._check(other):
            return NotImplemented
        return self + (-other)

    def scale(self, c) -> "SuperOp":
        return SuperOp(self.sig, {k: v.scale(c) for k, v in self.coeffs.items()}, self.prec)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, SuperOp):
            return compose(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, DiffPoly):
            return SuperOp(self.sig, {k: other * v for k, v in self.coeffs.items()}, self.prec)
        return NotImplemented

    def __pow__(self, n: int):
        return power(self, n)

    def __eq__(self, other):
        if not isinstance(other, SuperOp):
            return NotImplemented
        return self.sig is other.sig and (self - other).is_zero()

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.coeffs

    def truncate(self, prec: int) -> "SuperOp":
        if self.prec is not None and prec < self.prec:
            raise DepthExhaustedError(f"cannot extend precision from {self.prec} to {prec}")
        return SuperOp(self.sig, self.coeffs, prec)

    def map_coeffs(self, fn) -> "SuperOp":
        return SuperOp(self.sig, {k: fn(v) for k, v in self.coeffs.items()}, self.prec)

    def sorted_keys(self):
        return sorted(self.coeffs, key=lambda k: (-self.order(k), k))

    def __repr__(self):
        from .render import render_op

        return f"SuperOp({render_op(self)}; prec={self.prec})"


def _min_or_max(p, q):
    # a sum is exact only where both summands are
    if p is None:
        return q
    if q is None:
        return p
    return max(p, q)


# composition ---------------------------------------------------------------


class _DerivCache:
    """Lazily computed derivatives of one coefficient.

    A word is a tuple of steps applied left to right: ``"dx"``, ``"D"``,
    ``"D1"``, ``"D2"`` or ``"S"`` (the grade sign (-1)^|g| g).
    """

    def __init__(self, f: DiffPoly):
        self.f = f
        self.dxs = [f]
        self.other = {}

    def dx(self, i):
        while len(self.dxs) <= i:
            self.dxs.append(derive(self.dxs[-1], "dx"))
        return self.dxs[i]

    def d(self, i, word):
        if not word:
            return self.dx(i)
        key = (i, word)
        hit = self.other.get(key)
        if hit is None:
            prev = self.d(i, word[:-1])
            hit = grade_sign(prev) if word[-1] == "S" else derive(prev, word[-1])
            self.other[key] = hit
        return hit


def _n1_basis_times_coeff(key: int, cache: _DerivCache, lo: int, hi):
    """D^j o f = sum g D^o; only orders lo..hi are kept."""
    out = []
    j = key
    m, odd = divmod(j, 2)
    i = 0
    while True:
        o = j - 2 * i
        if o < lo or (m >= 0 and i > m):
            break
        c = binom(m, i)
        if odd:
            # D o (g d^(m-i)) = (Dg) D^(o-1) + (-1)^|g| g D^o
            if o - 1 >= lo and (hi is None or o - 1 <= hi):
                out.append((cache.d(i, ("D",)), c, o - 1))
            if hi is None or o <= hi:
                out.append((cache.d(i, ("S",)), c, o))
        elif hi is None or o <= hi:
            out.append((cache.dx(i), c, o))
        i += 1
    return out


def compose(A: SuperOp, B: SuperOp, depth: int = DEFAULT_DEPTH, orders=None) -> SuperOp:
    """Operator product A o B.

    The result is exact down to the precision allowed by the inputs; infinite
    expansions are cut ``depth`` orders below the top of the product.
    ``orders=(lo, hi)`` restricts the computation to a window of orders.
    """
    if A.sig is not B.sig:
        raise SignatureError("operators live in different signatures")
    sig = A.sig
    if not A.coeffs or not B.coeffs:
        return SuperOp(sig, {}, _product_prec(A, B, depth))
    prec = _product_prec(A, B, depth)
    lo = prec if prec is not None else -(10**9)
    hi = None
    if orders is not None:
        lo = max(lo, orders[0])
        hi = orders[1]
    acc: dict = {}
    n1 = sig.susy == 1
    for kb, fb in B.coeffs.items():
        ob = order_of(sig.susy, kb)
        cache = _DerivCache(fb)
        sub_lo = lo - ob
        sub_hi = None if hi is None else hi - ob
        for ka, fa in A.coeffs.items():
            if order_of(sig.susy, ka) < sub_lo:
                continue
            if n1:
                pieces = ((g, c, 1, o + kb) for g, c, o in _n1_basis_times_coeff(ka, cache, sub_lo, sub_hi))
            else:
                pieces = (
                    (g, c) + _n2_basis_product(k2, kb) for g, c, k2 in _n2_basis_times_coeff(ka, cache, sub_lo, sub_hi)
                )
            for g, c, sign, key in pieces:
                if not g.terms:
                    continue
                term = fa * g
                if sign < 0:
                    c = -c
                if c != 1:
                    term = term.scale(c)
                if term.terms:
                    acc[key] = acc[key] + term if key in acc else term
    out_prec = prec
    if orders is not None:
        out_prec = lo
    return SuperOp(sig, acc, out_prec)


def _has_negative(A: SuperOp) -> bool:
    if A.sig.susy == 1:
        return any(k < 0 for k in A.coeffs)
    return any(k[2] < 0 for k in A.coeffs)


def _product_prec(A: SuperOp, B: SuperOp, depth: int):
    ta, tb = A.top, B.top
    cands = []
    if A.prec is not None and tb is not None:
        cands.append(A.prec + tb)
    if B.prec is not None and ta is not None:
        cands.append(ta + B.prec)
    if ta is None or tb is None:
        return _min_prec(A.prec, B.prec)
    if not cands and not _has_negative(A):
        return None
    floor = ta + tb - depth
    return max([floor] + ([min(cands)] if cands else []))


def _n2_basis_times_coeff(key, cache: _DerivCache, lo: int, hi):
    """D1^a D2^b d^k o f = sum g D1^a' D2^b' d^m for N=2."""
    a, b, k = key
    out = []
    base = a + b + 2 * k
    i = 0
    while True:
        if base - 2 * i < lo or (k >= 0 and i > k):
            break
        c = binom(k, i)
        m = k - i
        # D2 then D1 act on g d^m: each either differentiates g or passes it with (-1)^|g|
        states = [((), 0, 0)]
        for which, present in (("D2", b), ("D1", a)):
            if present:
                new = []
                for word, aa, bb in states:
                    new.append((word + (which,), aa, bb))
                    new.append((word + ("S",), 1 if which == "D1" else aa, 1 if which == "D2" else bb))
                states = new
        for word, aa, bb in states:
            o = aa + bb + 2 * m
            if o < lo or (hi is not None and o > hi):
                continue
            out.append((cache.d(i, word), c, (aa, bb, m)))
        i += 1
    return out


def _n2_basis_product(k1, k2):
    a, b, m = k1
    c, d, l = k2
    sign = -1 if (b and c) else 1
    return sign, (a ^ c, b ^ d, m + l + (a & c) + (b & d))


def power(A: SuperOp, n: int, depth: int = DEFAULT_DEPTH) -> SuperOp:
    if n < 1:
        raise ValueError("power needs n >= 1")
    out = A
    for _ in range(n - 1):
        out = compose(out, A, depth)
    return out


def gcommutator(A: SuperOp, B: SuperOp, depth: int = DEFAULT_DEPTH) -> SuperOp:
    """Graded commutator AB - (-1)^{|A||B|} BA."""
    pa, pb = A.parity, B.parity
    if "mixed" in (pa, pb):
        raise SignatureError("graded commutator needs parity-homogeneous operators")
    ab = compose(A, B, depth)
    ba = compose(B, A, depth)
    return ab + ba if (pa and pb) else ab - ba


# projections and residues ---------------------------------------------------

PLUS, GEQ_ONE = "plus", "geq_one"
GEQ_ONE_CONVENTIONS = ("dorder", "d1d2", "strict")
DEFAULT_GEQ_ONE = "dorder"


def _geq_one_keep(convention):
    if convention == "dorder":
        # operator order a + b + 2k >= 1 in D-units: drops only k < 0 and the multiplication part
        return lambda k: k[2] >= 1 or (k[2] == 0 and k[0] + k[1] >= 1)
    if convention == "d1d2":
        return lambda k: k[2] >= 1 or (k[2] == 0 and k[0] == 1 and k[1] == 1)
    if convention == "strict":
        return lambda k: k[2] >= 1
    raise ValueError(f"unknown geq_one convention {convention!r}")


def project(A: SuperOp, cut: str = PLUS, convention: str = DEFAULT_GEQ_ONE) -> SuperOp:
    """Differential part of an operator.

    ``plus`` keeps D^j with j >= 0 (N=1) or every basis element with k >= 0
    (N=2).  ``geq_one`` keeps the part of order at least one; for N=2 the
    treatment of the k = 0 elements is selected by ``convention``:
    ``dorder`` keeps D1, D2 and D1 D2, ``d1d2`` keeps only D1 D2 and
    ``strict`` keeps none of them.
    """
    susy = A.sig.susy
    if cut == PLUS:
        need = 0
        keep = (lambda k: k >= 0) if susy == 1 else (lambda k: k[2] >= 0)
    elif cut == GEQ_ONE:
        need = 1
        keep = (lambda k: k >= 1) if susy == 1 else _geq_one_keep(convention)
    else:
        raise ValueError(f"unknown projection {cut!r}")
    if A.prec is not None and A.prec > need:
        raise DepthExhaustedError(f"projection needs precision <= {need}, operator has {A.prec}")
    return SuperOp(A.sig, {k: v for k, v in A.coeffs.items() if keep(k)}, None)


def sres(A: SuperOp) -> DiffPoly:
    """Super residue: coefficient of D^{-1} (N=1) or D1 D2 d^{-1} (N=2)."""
    key = -1 if A.sig.susy == 1 else (1, 1, -1)
    return A[key]


# application to functions ----------------------------------------------------


def apply(op: SuperOp, f: DiffPoly) -> DiffPoly:
    """Action of a differential operator on a function."""
    out = f.sig.zero()
    for key, c in op.coeffs.items():
        if op.sig.susy == 1:
            if key < 0:
                raise ValueError("cannot apply a negative power of D to a local function")
            g = f
            for _ in range(key):
                g = derive(g, "D")
        else:
            a, b, k = key
            if k < 0:
                raise ValueError("cannot apply a negative power of dx to a local function")
            g = f
            for _ in range(k):
                g = derive(g, "dx")
            if b:
                g = derive(g, "D2")
            if a:
                g = derive(g, "D1")
        out = out + c * g
    return out


# roots -----------------------------------------------------------------------


def _coeff_at(op: SuperOp, key):
    return op.coeffs.get(key, op.sig.zero())


def root(A: SuperOp, r: int, depth: int = DEFAULT_DEPTH, antiderivative=None) -> SuperOp:
    """Monic r-th root (r in {2, 4}) exact to ``depth`` orders below its top.

    The fourth root of an even N=1 operator has odd coefficients that are only
    determined through their x-derivatives; ``antiderivative`` maps a density
    R to a solution of dx W = R (the default adjoins a nonlocal generator).
    """
    if r == 2:
        return _sqrt(A, depth, antiderivative)
    if r == 4:
        return _sqrt(_sqrt(A, depth + 2, antiderivative), depth, antiderivative)
    raise ValueError("only square and fourth roots are supported")


def _sqrt(A: SuperOp, depth: int, antiderivative) -> SuperOp:
    sig = A.sig
    top = A.top
    if top is None or top % 2:
        raise RootError("square root needs an operator of even top order")
    n = top // 2
    if sig.susy == 1:
        if A.coeffs[top] != sig.one():
            raise RootError("square root needs a monic operator")
        return _sqrt_n1(A, n, depth, antiderivative)
    if top % 4 or A.coeffs.get((0, 0, top // 2)) != sig.one():
        raise RootError("N=2 square root needs a monic operator with top term d^(2m)")
    return _sqrt_n2(A, n, depth)


def _sqrt_n1(A: SuperOp, n: int, depth: int, antiderivative) -> SuperOp:
    sig = A.sig
    prec = n - depth
    if A.prec is not None and A.prec > n + prec:
        raise DepthExhaustedError("input operator precision is insufficient for the requested root depth")
    coeffs = {n: sig.one()}

    def residual(o):
        S = SuperOp(sig, coeffs, None)
        sq = compose(S, S, depth=10**6, orders=(o, o))
        return _coeff_at(A, o) - _coeff_at(sq, o)

    j = n - 1
    while j >= prec:
        par = (n + j) % 2
        factor = 2 if (n % 2 == 0 or par == 0) else 0
        if factor:
            coeffs[j] = residual(n + j).scale(Fraction(1, 2))
            j -= 1
            continue
        if n != 1:
            raise RootError(f"degenerate step at order {j} for a root of odd order {n}")
        # t_j drops out at order j + 1, which is a consistency condition; orders
        # j and j - 1 give D t_j + 2 t_{j-1} = res_j and D t_{j-1} = res_{j-1}
        if not residual(j + 1).is_zero():
            raise RootError(f"inconsistent triangular system at order {j + 1}")
        res_j = residual(j)
        res_j1 = residual(j - 1)
        tj = _antiderivative(derive(res_j, "D") - res_j1.scale(2), antiderivative)
        coeffs[j] = tj
        coeffs[j - 1] = (res_j - derive(tj, "D")).scale(Fraction(1, 2))
        for o in (j, j - 1):
            if not residual(o).is_zero():
                raise RootError(f"unsolvable triangular step at order {o}")
        j -= 2
    return SuperOp(sig, {k: v for k, v in coeffs.items() if k >= prec}, prec)


def _antiderivative(target: DiffPoly, antiderivative):
    if target.is_zero():
        return target
    if antiderivative is not None:
        return antiderivative(target)
    from .nonlocal_ext import dx_inverse

    return dx_inverse(target)


def _sqrt_n2(A: SuperOp, n: int, depth: int) -> SuperOp:
    sig = A.sig
    half = n // 2  # S = d^half + ...
    prec = n - depth
    coeffs = {(0, 0, half): sig.one()}
    w = n - 1
    while w >= prec:
        keys = [(0, 0, w // 2), (1, 1, w // 2 - 1)] if w % 2 == 0 else [(1, 0, (w - 1) // 2), (0, 1, (w - 1) // 2)]
        S = SuperOp(sig, coeffs, None)
        sq = compose(S, S, depth=10**6, orders=(w + n, w + n))
        for key in keys:
            tk = (key[0], key[1], key[2] + half)
            res = _coeff_at(A, tk) - _coeff_at(sq, tk)
            coeffs[key] = res.scale(Fraction(1, 2))
        w -= 1
    S = SuperOp(sig, coeffs, prec)
    return S
