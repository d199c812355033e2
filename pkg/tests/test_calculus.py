from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from superkdv.calculus import (
    EvolutionRule,
    Functional,
    UnsupportedDensityError,
    derive,
    euler,
    expand_components,
    is_exact,
    prolong_symmetry,
    prolong_time,
)
from superkdv.graded_ring import Signature, SignatureError, substitute
from superkdv.models import components, kuper, n1_signature, n2_signature, skdv
from superkdv.nonlocal_ext import D_inverse

from conftest import polys

N1 = n1_signature()
N2 = n2_signature()
CM1 = components(N1)
CM2 = components(N2)
C1 = CM1.sig
C0 = Signature(0, [("u", "even", 2)])

phi = N1.field("phi")
Phi = N2.field("Phi")


def D(p, n=1, d="D"):
    for _ in range(n):
        p = derive(p, d)
    return p


# derive ----------------------------------------------------------------------


@pytest.mark.parametrize("k", range(6))
def test_derive_raises_D_order(k):
    assert derive(N1.jet("phi", k), "D") == N1.jet("phi", k + 1)


def test_derive_graded_leibniz_example():
    assert derive(phi * D(phi), "D") == D(phi) * D(phi) - phi * D(phi, 1, "dx")


def test_derive_D1_of_D2Phi():
    # D1 (D2 Phi) is the stored normal-ordered generator itself
    assert derive(D(Phi, 1, "D2"), "D1") == N2.jet("Phi", (1, 1, 0))
    # the anticommutation sign appears for D2 (D1 Phi)
    assert derive(D(Phi, 1, "D1"), "D2") == -N2.jet("Phi", (1, 1, 0))


def test_derive_incompatible_signature():
    with pytest.raises(SignatureError):
        derive(phi, "D1")
    with pytest.raises(SignatureError):
        derive(Phi, "D")


# prolong_time ----------------------------------------------------------------

R = skdv(3).rule


def test_prolong_time_on_field():
    assert prolong_time(R, phi) == R["phi"]


def test_prolong_time_on_jet():
    assert prolong_time(R, D(phi)) == derive(R["phi"], "D")


def test_prolong_time_of_H3_density_is_exact():
    assert is_exact(prolong_time(R, phi * D(phi)))


@given(polys(N1))
def test_prolong_time_commutes_with_derivations(p):
    for d in ("D", "dx"):
        assert prolong_time(R, derive(p, d)) == derive(prolong_time(R, p), d)


# components ------------------------------------------------------------------


def test_components_of_H3_density():
    u, xi = C1.field("u"), C1.field("xi")
    got = expand_components(phi * D(phi))
    assert got["1"] == xi * u
    assert got["theta"] == u * u - xi * D(xi, 1, "dx")


def test_components_of_Dphi():
    got = expand_components(D(phi))
    assert got == {"1": C1.field("u"), "theta": D(C1.field("xi"), 1, "dx")}


def test_components_of_Phi():
    S = CM2.sig
    got = CM2.expand(Phi)
    want = {"1": "v", "theta1": "xi1", "theta2": "xi2", "theta2theta1": "u"}
    assert {k: v for k, v in got.items() if not v.is_zero()} == {k: S.field(n) for k, n in want.items()}


def test_reassemble_roundtrip():
    p = phi * D(phi, 3) + D(phi, 1, "dx")
    assert CM1.reassemble(CM1.expand(p)) == CM1.lift(p)


@given(polys(N1), polys(N1))
def test_expansion_is_a_ring_homomorphism(p, q):
    assert CM1.lift(p * q) == CM1.lift(p) * CM1.lift(q)


@given(polys(N2, max_len=2), polys(N2, max_len=2))
def test_expansion_is_a_ring_homomorphism_n2(p, q):
    assert CM2.lift(p * q) == CM2.lift(p) * CM2.lift(q)


# euler -----------------------------------------------------------------------


def test_euler_H3_density():
    assert euler(phi * D(phi), "phi") == D(phi).scale(2)


def test_euler_kernel_example():
    assert euler(derive(phi * D(phi, 1, "dx") * D(phi), "D"), "phi").is_zero()


def test_euler_classical():
    u = C0.field("u")
    assert euler(u * u, "u") == u.scale(2)


def test_euler_rejects_nonlocal():
    with pytest.raises(UnsupportedDensityError):
        euler(D_inverse(phi, reduce=False) * phi, "phi")


# first-principles variation: phi -> phi + t psi, linear order in t
V = Signature(1, [("phi", "odd", Fraction(3, 2)), ("psi", "odd", Fraction(3, 2))], [("t", "even", 0)], label="var")


def _variation_residual(rho):
    """(d/dt rho[phi + t psi])|_{t=0} - psi * euler(rho) must be exact."""
    vphi, psi, t = V.field("phi"), V.field("psi"), V.param("t")
    varied = substitute(rho, {"phi": vphi + t * psi}, V).param_coefficients("t").get(1, V.zero())
    grad = substitute(euler(rho, "phi"), {"phi": vphi}, V)
    return varied - psi * grad


def test_euler_sign_from_first_principles():
    assert is_exact(_variation_residual(phi * D(phi)))


@given(polys(N1, parity=1))
def test_euler_matches_variation(rho):
    assert is_exact(_variation_residual(rho))


@given(polys(N1))
def test_euler_kernel_n1(x):
    for d in ("D", "dx"):
        assert euler(derive(x, d), "phi").is_zero()


@given(polys(N2, max_len=2))
def test_euler_kernel_n2(x):
    for d in ("D1", "D2", "dx"):
        assert euler(derive(x, d), "Phi").is_zero()


@given(polys(C1))
def test_euler_kernel_components(x):
    for f in ("u", "xi"):
        assert euler(derive(x, "dx"), f).is_zero()


# exactness -------------------------------------------------------------------


def test_is_exact_examples():
    xi = C1.field("xi")
    assert is_exact(xi * D(xi, 2, "dx"))
    assert not is_exact(xi * D(xi, 1, "dx"))
    assert is_exact(C1.zero())


def test_functional_equality():
    a = Functional(phi * D(phi))
    b = Functional(phi * D(phi) + derive(phi * D(phi, 1, "dx"), "D"))
    assert a == b
    assert not (a - Functional(phi * D(phi, 3))).is_zero()


# derivation identities -------------------------------------------------------


@given(polys(N1))
def test_D_squared_is_dx(p):
    assert D(p, 2) == derive(p, "dx")


@given(polys(N2, max_len=2))
def test_n2_derivation_algebra(p):
    assert D(p, 2, "D1") == derive(p, "dx")
    assert D(p, 2, "D2") == derive(p, "dx")
    assert derive(derive(p, "D2"), "D1") == -derive(derive(p, "D1"), "D2")


@given(st.data())
def test_graded_leibniz(data):
    pp = data.draw(st.sampled_from([0, 1]))
    p = data.draw(polys(N1, pp, params=("eta",)))
    q = data.draw(polys(N1, params=("eta",)))
    assert derive(p * q, "D") == derive(p, "D") * q + (p * derive(q, "D")).scale(-1 if pp else 1)
    assert derive(p * q, "dx") == derive(p, "dx") * q + p * derive(q, "dx")


# supersymmetry ---------------------------------------------------------------


def test_susy_transform_is_the_reference_one():
    tr = CM1.supersymmetry(0, "eta")
    eta, u, xi = C1.param("eta"), C1.field("u"), C1.field("xi")
    assert tr["u"] == eta * D(xi, 1, "dx")
    assert tr["xi"] == eta * u


def test_susy_skdv_components():
    rule = CM1.component_rule(skdv(3).rule)
    res = prolong_symmetry(CM1.supersymmetry(0, "eta"), rule)
    assert all(r.is_zero() for r in res.values())


def test_susy_kuper_fails():
    res = prolong_symmetry(CM1.supersymmetry(0, "eta"), kuper().rule)
    assert any(not r.is_zero() for r in res.values())


def test_susy_translation_trivial_rule():
    rule = EvolutionRule(N1, {"phi": derive(phi, "dx")})
    res = prolong_symmetry({"phi": N1.param("eta") * D(phi)}, rule)
    assert all(r.is_zero() for r in res.values())
