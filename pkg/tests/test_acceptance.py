"""Acceptance criteria: one test per criterion, each an exact zero-residual check.

Run with ``pytest -v tests/test_acceptance.py``: every criterion shows as one
PASSED/FAILED line. Each criterion must finish within ``BUDGET`` seconds at
the default truncation depth.
"""

import random
import time
from fractions import Fraction

import pytest

from superkdv import models as M
from superkdv.calculus import derive, euler, is_exact, proportionality
from superkdv.graded_ring import DiffPoly, mono_parity
from superkdv.nonlocal_ext import verify_nonlocal_charges
from superkdv.psdo import DEFAULT_DEPTH, SuperOp, compose, gcommutator, power, root, sres
from superkdv.report import PASS

from conftest import jet_pool

BUDGET = 10.0
N1 = M.n1_signature()
N2 = M.n2_signature()
phi = N1.field("phi")


def d(p, *word):
    for w in word:
        p = derive(p, w)
    return p


@pytest.fixture(autouse=True)
def _budget(request):
    t0 = time.perf_counter()
    yield
    dt = time.perf_counter() - t0
    print(f"{request.node.name}: {dt:.2f}s")
    assert dt < BUDGET, f"{request.node.name} took {dt:.1f}s"


def _all_pass(checks):
    bad = [(c.claim, c.residual) for c in checks if c.status != PASS]
    assert not bad, bad


def test_depth_is_16():
    assert DEFAULT_DEPTH == 16


# 1 -----------------------------------------------------------------------------


def test_criterion_01_lax_derivation_n1():
    sk = M.skdv(3)
    res = M.lax_flow(sk)
    assert set(res.commutator.coeffs) == {1}  # multiplication-type: only a D term
    assert res.rule["phi"] == sk.rule["phi"]
    # nonlinear part matches 3 (phi D phi)_x, i.e. c = 3, and no other c
    assert res.rule["phi"] + d(phi, "dx", "dx", "dx") == d(phi * d(phi, "D"), "dx").scale(3)
    for c in (0, 1, 2, 4):
        assert M._ratio(res.rule["phi"], M.skdv(c).rule["phi"]) is None
    chk = M.check_lax_flow(sk)
    assert chk.ok and chk.residual == "0"
    assert any("reference form" in n for n in chk.notes)


# 2 -----------------------------------------------------------------------------


def test_criterion_02_component_fidelity():
    rule = M.component_form(M.skdv(3))
    S = rule.sig
    u, xi = S.field("u"), S.field("xi")
    assert rule["u"] == -d(u, "dx", "dx", "dx") + (u * d(u, "dx")).scale(6) - (xi * d(xi, "dx", "dx")).scale(3)
    assert rule["xi"] == -d(xi, "dx", "dx", "dx") + d(u * xi, "dx").scale(3)
    assert M.check_skdv_components(3).ok


# 3 -----------------------------------------------------------------------------


def test_criterion_03_conservation_n1():
    _all_pass(M.check_lax_conservation(M.skdv(3), (1, 3, 5, 7)))
    checks = {c.claim: c for c in M.check_h3_normalization()}
    norm = checks["skdv.H3.normalization"]
    assert norm.ok
    assert proportionality(M.conserved_density(M.skdv(3), 3), phi * d(phi, "D")) == Fraction(3, 8)
    assert checks["skdv.H3.components"].ok


# 4 -----------------------------------------------------------------------------


def test_criterion_04_gardner():
    checks = {c.claim: c for c in M.gardner_verify()}
    for name in ("gardner.identity", "gardner.rhs_exact", "gardner.eps0_limit", "gardner.perturbed_control"):
        assert checks[name].ok, name
    assert all(r.is_zero() for r in M.gardner_residual().values())
    _all_pass(M.check_gardner_expansion(6))
    h = M.gardner_expand(6)
    assert proportionality(h[2], phi * d(phi, "D")) == -1


# 5 -----------------------------------------------------------------------------


def test_criterion_05_supersymmetry():
    _all_pass(M.check_supersymmetry(M.skdv(3)))
    res = M.susy_residuals(M.kuper())
    assert any(not r.is_zero() for r in res.values())
    _all_pass(M.check_supersymmetry(M.kuper(), expect="nonzero"))


# 6 -----------------------------------------------------------------------------


def test_criterion_06_bihamiltonian_n1():
    chk = M.first_hamiltonian_check()
    assert chk.ok and chk.residual == "0"
    assert chk.constants["lambda"] == Fraction(-16, 5)


# 7 -----------------------------------------------------------------------------


def test_criterion_07_nonlocal_charges_n1():
    got = {c.claim: c for c in verify_nonlocal_charges(M.skdv(3))}
    for name in ("skdv.J1/2", "skdv.J3/2", "skdv.J5/2"):
        assert got[name].ok and got[name].residual == "0", name
    assert "witness" in got["skdv.J3/2"].details
    (ctrl,) = verify_nonlocal_charges(M.kuper())
    assert ctrl.ok and ctrl.expect == "nonzero" and ctrl.residual != "0"
    assert M.fourth_root_check().ok


# 8 -----------------------------------------------------------------------------


@pytest.mark.parametrize("a", [4, -2, 1])
def test_criterion_08_n2_lax_flows(a):
    chk = M.check_lax_flow(M.skdv2(a))
    assert chk.ok and chk.residual == "0"


def test_criterion_08_n2_hamiltonian_symbolic():
    flow, ref = M.check_hamiltonian_n2("a")
    assert flow.ok and flow.constants["normalization"] == 2
    assert ref.ok


# 9 -----------------------------------------------------------------------------


@pytest.mark.parametrize("a", [4, -2, 1])
def test_criterion_09_n2_conservation(a):
    m = M.skdv2(a)
    _all_pass(M.check_lax_conservation(m, (1, 3, 5)))
    got = {c.claim: c for c in verify_nonlocal_charges(m)}
    assert got[f"skdv2@a={a}.int_xi1"].ok
    assert got[f"skdv2@a={a}.int_xi2"].ok


# 10 ----------------------------------------------------------------------------

RNG_SEED = 20261016


def _poly(rng, sig, parity=None, terms=3, length=3):
    pool = jet_pool(sig, max_order=2 if sig.susy == 2 else 3)
    raw = []
    for _ in range(rng.randint(1, terms)):
        syms = [rng.choice(pool) for _ in range(rng.randint(1 if parity is not None else 0, length))]
        raw.append((syms, Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 1, 2]))))
    p = DiffPoly.from_raw(sig, raw)
    if parity is not None:
        p = DiffPoly(sig, {m: c for m, c in p.terms.items() if mono_parity(sig, m) == parity})
    return p


def _op(rng, parity, lo=-2, hi=2):
    coeffs = {j: _poly(rng, N1, (parity + j) % 2, 2, 2) for j in range(lo, hi + 1) if rng.random() < 0.6}
    if not any(not c.is_zero() for c in coeffs.values()):
        coeffs[hi] = N1.one() if (parity + hi) % 2 == 0 else phi
    return SuperOp(N1, coeffs)


def test_criterion_10_property_suites():
    rng = random.Random(RNG_SEED)
    n = 0
    for _ in range(100):
        sig = rng.choice([N1, N2])
        pp, pq = rng.randint(0, 1), rng.randint(0, 1)
        p, q, r = _poly(rng, sig, pp), _poly(rng, sig, pq), _poly(rng, sig)
        assert p * q == (q * p).scale(-1 if pp * pq else 1)  # graded commutativity
        assert (p * q) * r == p * (q * r)  # ring associativity
        if sig is N1:
            assert d(r, "D", "D") == d(r, "dx")
            assert euler(d(r, "D"), "phi").is_zero() and euler(d(r, "dx"), "phi").is_zero()
        else:
            assert d(r, "D1", "D1") == d(r, "dx") and d(r, "D2", "D2") == d(r, "dx")
            for w in ("D1", "D2", "dx"):
                assert euler(d(r, w), "Phi").is_zero()
        n += 1
    assert n >= 100
    for _ in range(100):
        a, b, c = _op(rng, 0, -1, 2), _op(rng, 1, -1, 1), _op(rng, 0, -1, 1)
        assert (compose(compose(a, b, 8), c, 8) - compose(a, compose(b, c, 8), 8)).is_zero()
    for _ in range(50):
        a, b = _op(rng, rng.randint(0, 1)), _op(rng, rng.randint(0, 1))
        assert is_exact(sres(gcommutator(a, b, depth=8)))
    L = M.n1_lax_operator(N1)
    S, T = root(L, 2), root(L, 4)
    for diff in (compose(S, S) - L, power(T, 4) - L):
        assert diff.is_zero() and diff.prec <= -12


# 11 ----------------------------------------------------------------------------


def test_criterion_11_involutivity():
    m = M.skdv(3)
    H3, H5 = M.conserved_density(m, 3), M.conserved_density(m, 5)
    assert M.poisson_bracket(H3, H5, M.p2_n1()).is_zero()
    _all_pass(M.check_involutivity())
