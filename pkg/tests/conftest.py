"""Shared fixtures and hypothesis strategies."""

from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from superkdv.graded_ring import DiffPoly, mono_parity
from superkdv.models import components, n1_signature, n2_signature
from superkdv.psdo import SuperOp

settings.register_profile(
    "engine", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("engine")


@pytest.fixture(scope="session")
def n1():
    return n1_signature()


@pytest.fixture(scope="session")
def n2():
    return n2_signature()


@pytest.fixture(scope="session")
def comp1():
    return components(n1_signature()).sig


def jet_pool(sig, max_order=3, params=()):
    out = []
    for f in sig.fields:
        if sig.susy == 2:
            for k in range(max_order):
                for a in (0, 1):
                    for b in (0, 1):
                        out.append(sig.jet_symbol(f.name, (a, b, k)))
        else:
            out.extend(sig.jet_symbol(f.name, k) for k in range(max_order + 1))
    out.extend(sig.param_symbol(p) for p in params)
    return out


coeffs = st.builds(Fraction, st.integers(-4, 4).filter(bool), st.sampled_from([1, 1, 1, 2, 3]))


@st.composite
def polys(draw, sig, parity=None, max_terms=4, max_len=3, params=()):
    """Random polynomial; ``parity`` keeps only monomials of that parity."""
    pool = jet_pool(sig, params=params)
    raw = []
    for _ in range(draw(st.integers(1, max_terms))):
        syms = draw(st.lists(st.sampled_from(pool), min_size=0 if parity is None else 1, max_size=max_len))
        raw.append((syms, draw(coeffs)))
    p = DiffPoly.from_raw(sig, raw)
    if parity is not None:
        p = DiffPoly(sig, {m: c for m, c in p.terms.items() if mono_parity(sig, m) == parity})
    return p


@st.composite
def operators(draw, sig, parity=0, orders=(-2, 2)):
    """Random homogeneous N=1 pseudodifferential operator with D-orders in a window."""
    lo, hi = orders
    coeffs_ = {}
    for j in range(lo, hi + 1):
        if draw(st.booleans()):
            coeffs_[j] = draw(polys(sig, parity=(parity + j) % 2, max_terms=2, max_len=2))
    if not coeffs_:
        coeffs_[hi] = sig.one() if (parity + hi) % 2 == 0 else sig.field(sig.fields[0].name)
    return SuperOp(sig, coeffs_)
