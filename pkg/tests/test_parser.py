from fractions import Fraction

import pytest
from hypothesis import given

from superkdv import models as M
from superkdv.calculus import derive
from superkdv.nonlocal_ext import adjoin
from superkdv.parser import Add, ArityError, Deriv, ParseError, UnknownSymbolError, parse, parse_ast, tokenize
from superkdv.psdo import power, root
from superkdv.render import render_poly

from conftest import polys

N1 = M.n1_signature()
N2 = M.n2_signature()
phi = N1.field("phi")
Phi = N2.field("Phi")


def test_h3_density():
    assert parse("phi*D(phi)", N1) == phi * derive(phi, "D")


def test_n2_with_symbolic_parameter():
    got = parse("D1(D2(Phi)) + a*Phi^2", N2)
    assert got == derive(derive(Phi, "D2"), "D1") + N2.param("a") * Phi * Phi
    assert set(got.param_coefficients("a")) == {0, 1}


def test_unclosed_paren_position():
    with pytest.raises(ParseError) as e:
        parse("D(phi", N1)
    assert e.value.position == 6
    assert "position 6" in str(e.value)


@pytest.mark.parametrize(
    "text,pos",
    [("phi +", 6), ("phi ** phi", 6), ("(phi", 5), ("phi)", 4), ("3/0*phi", 3), ("phi $ phi", 5), ("", 1)],
)
def test_syntax_error_positions(text, pos):
    with pytest.raises(ParseError) as e:
        parse(text, N1)
    assert e.value.position == pos


def test_unknown_symbol():
    with pytest.raises(UnknownSymbolError) as e:
        parse("phi*psi", N1)
    assert e.value.position == 5


@pytest.mark.parametrize("text", ["D()", "D(phi, phi)", "D phi", "D1(phi)"])
def test_arity_errors(text):
    with pytest.raises(ArityError):
        parse(text, N1)


def test_rationals_and_unary_minus():
    assert parse("-3/4*phi", N1) == phi.scale(Fraction(-3, 4))
    assert parse("+phi - phi", N1).is_zero()
    assert parse("2", N1) == N1.const(2)


def test_dx_power_and_D_squared():
    assert parse("dx^3(phi)", N1) == parse("dx(dx(dx(phi)))", N1)
    assert parse("D(D(phi))", N1) == parse("dx(phi)", N1)


def test_powers_of_odd_vanish():
    assert parse("phi^2", N1).is_zero()


def test_ast_shape():
    node = parse_ast("-D(phi) + phi")
    assert isinstance(node, Add)
    assert node.terms[0][0] == -1 and isinstance(node.terms[0][1], Deriv)


def test_tokenize_positions():
    toks = tokenize("phi * D(phi)")
    assert [(k, p) for k, _, p in toks] == [("name", 1), ("op", 5), ("name", 7), ("op", 8), ("name", 9), ("op", 12), ("end", 13)]


def test_nonlocal_generator_round_trip():
    w = adjoin(phi, "D").poly
    p = w * phi + w * w * derive(phi, "D")
    assert parse(render_poly(p), N1) == p


# round trip on the expressions the suites produce ------------------------------


def _corpus():
    out = []
    for name in ("skdv", "kuper", "skdv_c=0", "skdv2@a=4", "skdv2@a=-2", "skdv2@a=1", "skdv2@a=sym"):
        out.extend(M.get_model(name).rule.rhs.values())
    for name in ("skdv", "skdv2@a=4"):
        out.extend(M.component_form(M.get_model(name)).rhs.values())
    out.extend(M.conserved_density(M.skdv(3), m) for m in (1, 3, 5, 7))
    out.extend(M.gardner_expand(6))
    GS = M.gardner_signature()
    chi, eps = GS.field("chi"), GS.param("eps")
    out.append(chi + eps * eps * chi * derive(chi, "D"))
    out.extend(power(root(M.n1_lax_operator(N1), 2), 3).coeffs.values())
    out.extend(root(M.n1_lax_operator(N1), 4).coeffs.values())
    out.append(N1.zero())
    return out


CORPUS = _corpus()


@pytest.mark.parametrize("k", range(len(CORPUS)))
def test_parse_render_parse_idempotent(k):
    p = CORPUS[k]
    text = render_poly(p)
    once = parse(text, p.sig)
    assert once == p
    assert parse(render_poly(once), p.sig) == once


@given(polys(N1, params=("eps", "eta")))
def test_round_trip_random_n1(p):
    assert parse(render_poly(p), N1) == p


@given(polys(N2, max_len=2, params=("a",)))
def test_round_trip_random_n2(p):
    assert parse(render_poly(p), N2) == p
