import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from superkdv.calculus import derive
from superkdv.graded_ring import (
    DiffPoly,
    GradedSubstitutionError,
    Signature,
    SignatureError,
    multiply,
    normalize,
    substitute,
)
from superkdv.models import gardner_signature, n1_signature, n2_signature

from conftest import polys

N1 = n1_signature()
N2 = n2_signature()
GS = gardner_signature()
C0 = Signature(0, [("xi", "odd", Fraction(3, 2)), ("u", "even", 2)], [("a", "even", 0)], label="N=0")


def xi_jet(k=0):
    return C0.jet_symbol("xi", k)


# normalize -----------------------------------------------------------------


def test_normalize_repeated_odd_vanishes():
    assert normalize(C0, [xi_jet(), xi_jet()]) == ((), 0)


def test_normalize_one_odd_transposition():
    mono, c = normalize(C0, [xi_jet(1), xi_jet(0)])
    assert mono == (xi_jet(0), xi_jet(1))
    assert c == -1


def test_normalize_even_odd_swap_has_no_sign():
    u = C0.jet_symbol("u")
    assert normalize(C0, [u, xi_jet()], 3) == normalize(C0, [xi_jet(), u], 3)
    assert normalize(C0, [u, xi_jet()], 3)[1] == 3


def test_normalize_unknown_symbol():
    with pytest.raises(SignatureError):
        normalize(C0, [(1, 7, 0)])


def _brute_sign(sig, syms):
    """Sign of sorting by explicit adjacent transpositions (bubble sort)."""
    syms = list(syms)
    sign = 1
    for i in range(len(syms)):
        for j in range(len(syms) - 1 - i):
            if syms[j] > syms[j + 1]:
                if sig.is_odd(syms[j]) and sig.is_odd(syms[j + 1]):
                    sign = -sign
                syms[j], syms[j + 1] = syms[j + 1], syms[j]
    for a, b in zip(syms, syms[1:]):
        if a == b and sig.is_odd(a):
            return 0
    return sign


@pytest.mark.parametrize("perm", list(itertools.permutations(range(4))))
def test_normalize_matches_bubble_sort_signs(perm):
    base = [xi_jet(0), xi_jet(1), C0.jet_symbol("u"), xi_jet(2)]
    syms = [base[i] for i in perm]
    mono, c = normalize(C0, syms)
    assert c == _brute_sign(C0, syms)
    assert mono == tuple(sorted(base))


# multiply --------------------------------------------------------------------


def test_multiply_odd_square():
    xi = C0.field("xi")
    assert multiply(xi, xi).is_zero()


def test_multiply_identity():
    u = C0.field("u")
    p = u * u + C0.param("a") * derive(u, "dx")
    assert multiply(p, C0.one()) == p


def test_multiply_xi_by_xix_u():
    # xi * (xi_x u): u is even, so no transposition of odd symbols is needed
    xi, u = C0.field("xi"), C0.field("u")
    xix = derive(xi, "dx")
    got = multiply(xi, xix * u)
    mono = (xi_jet(0), xi_jet(1), C0.jet_symbol("u"))
    assert got.terms == {tuple(sorted(mono)): Fraction(_brute_sign(C0, [xi_jet(0), xi_jet(1), C0.jet_symbol("u")]))}
    assert got.terms[tuple(sorted(mono))] == 1


def test_multiply_signature_mismatch():
    with pytest.raises(SignatureError):
        multiply(N1.field("phi"), N2.field("Phi"))


# substitute ------------------------------------------------------------------


def test_substitute_identity():
    phi = N1.field("phi")
    assert substitute(phi, {"phi": phi}) == phi


def test_substitute_linear():
    phi = N1.field("phi")
    chi, eps = GS.field("chi"), GS.param("eps")
    got = substitute(derive(phi, "D"), {"phi": eps * chi}, GS)
    assert got == eps * derive(chi, "D")


def test_substitute_gardner_order_eps2():
    phi = N1.field("phi")
    chi, eps = GS.field("chi"), GS.param("eps")
    dchi = derive(chi, "D")
    got = substitute(phi * derive(phi, "D"), {"phi": chi + eps * eps * chi * dchi}, GS)
    by_eps = got.param_coefficients("eps")
    assert by_eps[0] == chi * dchi
    # chi (D chi)^2 + chi D(chi D chi) = 2 chi (D chi)^2
    assert by_eps[2] == chi * dchi * dchi + chi * derive(chi * dchi, "D")
    assert by_eps[2] == (chi * dchi * dchi).scale(2)
    assert by_eps[4] == chi * dchi * dchi * dchi
    assert set(by_eps) == {0, 2, 4}


def test_substitute_parity_mismatch():
    phi = N1.field("phi")
    with pytest.raises(GradedSubstitutionError):
        substitute(phi, {"phi": GS.param("eps")}, GS)


def test_substitute_is_homomorphism():
    phi = N1.field("phi")
    chi, eps = GS.field("chi"), GS.param("eps")
    img = chi + eps * derive(chi, "dx")
    p, q = derive(phi, "D"), phi * derive(phi, "dx")
    a = substitute(p * q, {"phi": img}, GS)
    b = substitute(p, {"phi": img}, GS) * substitute(q, {"phi": img}, GS)
    assert a == b


# parity, degree, parameters ------------------------------------------------


def test_parity_of_zero_and_mixed():
    assert C0.zero().parity is None
    assert (C0.field("u") + C0.field("xi")).parity == "mixed"


def test_odd_parameter_is_nilpotent():
    eta = N1.param("eta")
    assert (eta * eta).is_zero()


def test_field_degrees():
    assert N1.field("phi").degree == Fraction(3, 2)
    assert N2.field("Phi").degree == 1
    assert derive(N1.field("phi"), "D").degree == 2


# properties ------------------------------------------------------------------

parities = st.sampled_from([0, 1])


@given(st.data())
def test_graded_commutativity(data):
    pp, pq = data.draw(parities), data.draw(parities)
    p = data.draw(polys(N1, pp, params=("eps", "eta")))
    q = data.draw(polys(N1, pq, params=("eps", "eta")))
    assert p * q == (q * p).scale(-1 if pp * pq else 1)


@given(st.data())
def test_graded_commutativity_n2(data):
    pp, pq = data.draw(parities), data.draw(parities)
    p = data.draw(polys(N2, pp, params=("a", "eta1")))
    q = data.draw(polys(N2, pq, params=("a", "eta1")))
    assert p * q == (q * p).scale(-1 if pp * pq else 1)


@given(polys(N1), polys(N1), polys(N1))
def test_associativity(p, q, r):
    assert (p * q) * r == p * (q * r)


@given(st.data())
def test_parity_and_degree_additive(data):
    sig = C0
    p = data.draw(polys(sig, data.draw(parities)))
    q = data.draw(polys(sig, data.draw(parities)))
    pq = p * q
    if pq.is_zero() or "mixed" in (p.degree, q.degree):
        return
    assert pq.parity == (p.parity + q.parity) % 2
    assert pq.degree == p.degree + q.degree


@given(st.permutations([(1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 0, 3), (0, 0)]))
def test_normalize_permutation_invariant(syms):
    m, c = normalize(C0, syms)
    m2, c2 = normalize(C0, m, c)
    assert (m2, c2) == (m, c)  # idempotent
    ref = [(1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 0, 3), (0, 0)]
    mr, cr = normalize(C0, ref)
    assert m == mr and abs(c) == abs(cr)


@given(polys(N1, params=("eps",)))
def test_even_parameter_is_central(p):
    eps = N1.param("eps")
    assert eps * p == p * eps


@given(polys(N1))
def test_additive_inverse(p):
    assert (p - p).is_zero()
    assert p + DiffPoly(N1) == p
