"""Formal antiderivative generators and exactness witnesses in extended rings."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .calculus import EvolutionRule, derive, prolong_time
from .graded_ring import (
    ODD,
    DiffPoly,
    NonlocalGenerator,
    Signature,
    SignatureError,
    mono_parity,
)
from .linsolve import solve_columns
from .render import render_poly


class CircularDefinitionError(ValueError):
    pass


class InconclusiveError(RuntimeError):
    """The ansatz space was exhausted without finding a witness."""


def _level(sig: Signature, density: DiffPoly) -> int:
    lv = 0
    for s in density.symbols():
        if s[0] == 2:
            if s not in sig.nonlocal_gens:
                raise CircularDefinitionError(f"density refers to unregistered generator {s[2]}")
            lv = max(lv, s[1])
    return lv + 1


def adjoin(density: DiffPoly, kind: str = "D") -> NonlocalGenerator:
    """Register the generator D^{-1}(density) (kind "D") or dx^{-1}(density) (kind "dx")."""
    sig = density.sig
    if kind not in ("D", "dx"):
        raise ValueError(f"unknown antiderivative kind {kind!r}")
    if kind == "D" and sig.susy != 1:
        raise SignatureError("D-antiderivatives need an N=1 signature")
    if sig.susy == 2:
        raise SignatureError("nonlocal generators are not supported for N=2")
    level = _level(sig, density)
    p = density.parity
    if p == "mixed":
        raise ValueError("antiderivative of a density of mixed parity")
    d = density.degree
    if d == "mixed":
        raise ValueError("antiderivative of an inhomogeneous density")
    if p is None:
        parity, degree = ODD, Fraction(0)
    else:
        parity = (1 - p) if kind == "D" else p
        degree = d - (Fraction(1, 2) if kind == "D" else 1)
    text = f"{'Dinv' if kind == 'D' else 'dxinv'}({render_poly(density)})"
    sym = (2, level, text, kind)
    gen = sig.nonlocal_gens.get(sym)
    if gen is None:
        gen = NonlocalGenerator(sym, density, kind, parity, degree)
        sig.nonlocal_gens[sym] = gen
    return gen


def generator_poly(gen: NonlocalGenerator) -> DiffPoly:
    return DiffPoly(gen.density.sig, {(gen.symbol,): Fraction(1)})


NonlocalGenerator.poly = property(generator_poly)


def D_inverse(density: DiffPoly, reduce: bool = True) -> DiffPoly:
    """D^{-1} of a density: a witness when one exists, else a new generator."""
    return _inverse(density, "D", reduce)


def dx_inverse(density: DiffPoly, reduce: bool = True) -> DiffPoly:
    """dx^{-1} of a density: a witness when one exists, else a new generator."""
    return _inverse(density, "dx", reduce)


def _inverse(density, kind, reduce):
    if density.is_zero():
        return density
    if reduce and density.degree not in (None, "mixed") and density.parity not in (None, "mixed"):
        w = find_antiderivative(density, kind)
        if w.found:
            return w.witness
    # pull out the leading rational factor so that multiples share a generator
    lead = density.terms[min(density.terms)]
    return adjoin(density.scale(1 / lead), kind).poly.scale(lead)


# ansatz spaces ---------------------------------------------------------------


def _related_generators(sig: Signature, density: DiffPoly) -> list:
    """Generators in the density, their dependencies and their D-partners."""
    seen = set()
    stack = [s for s in density.symbols() if s[0] == 2]
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        gen = sig.nonlocal_gens[s]
        stack.extend(t for t in gen.density.symbols() if t[0] == 2)
        if gen.kind == "dx" and sig.susy == 1:
            stack.append(adjoin(gen.density, "D").symbol)
    return sorted(seen)


def _jet_symbols(sig: Signature, max_degree: Fraction) -> list:
    out = []
    for f in sig.fields:
        k = 0
        while True:
            if sig.susy == 2:
                made = False
                for a, b in ((0, 0), (1, 0), (0, 1), (1, 1)):
                    s = (1, sig.field_index[f.name], a, b, k)
                    if sig.symbol_degree(s) <= max_degree:
                        out.append(s)
                        made = True
                if not made:
                    break
            else:
                s = (1, sig.field_index[f.name], k)
                if sig.symbol_degree(s) > max_degree:
                    break
                out.append(s)
            k += 1
    return out


def monomial_basis(sig: Signature, degree: Fraction, parity: int, extra=()) -> list:
    """All parameter-free monomials of the given scaling degree and parity."""
    syms = sorted(set(_jet_symbols(sig, degree)) | {s for s in extra if 0 < sig.symbol_degree(s) <= degree})
    syms = [s for s in syms if sig.symbol_degree(s) > 0]
    out = []

    def rec(i, left, cur, par):
        if left == 0:
            if par == parity:
                out.append(tuple(cur))
            return
        for j in range(i, len(syms)):
            s = syms[j]
            d = sig.symbol_degree(s)
            if d > left:
                continue
            odd = sig.is_odd(s)
            if odd and cur and cur[-1] == s:
                continue
            cur.append(s)
            rec(j + 1 if odd else j, left - d, cur, par ^ odd)
            cur.pop()

    rec(0, Fraction(degree), [], 0)
    return out


@dataclass
class Witness:
    """Result of an exactness search: ``derivation(witness) == density``."""

    density: DiffPoly
    derivation: str
    witness: DiffPoly | None
    basis_size: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.witness is not None


def find_antiderivative(density: DiffPoly, derivation: str = "D", extra_generators=(), extra_columns=None) -> Witness:
    """Search W in the (extended) ring with derivation(W) == density by linear ansatz.

    ``extra_columns`` maps labels to polynomials that may be added to the
    density with unknown rational weights (used to fix free coefficients of a
    candidate conserved density); their solved weights land in ``Witness.extra``.
    """
    sig = density.sig
    shift = Fraction(1, 2) if derivation in ("D", "D1", "D2") else Fraction(1)
    dpar = 1 if derivation in ("D", "D1", "D2") else 0
    groups = density.split_params()
    extra_columns = extra_columns or {}
    if extra_columns and len(groups) > 1:
        raise ValueError("free coefficients are only supported for parameter-free densities")
    if density.is_zero() and not extra_columns:
        return Witness(density, derivation, sig.zero())
    gens = set(extra_generators)
    gens.update(_related_generators(sig, density))
    for v in extra_columns.values():
        gens.update(_related_generators(sig, v))
    total = sig.zero()
    solved_extra = {}
    size = 0
    for prefix, part in sorted(groups.items()) or [((), density)]:
        probe = part if part.terms else next(iter(extra_columns.values()))
        deg = probe.degree
        par = probe.parity
        if deg in (None, "mixed") or par in (None, "mixed"):
            return Witness(density, derivation, None)
        basis = monomial_basis(sig, deg - shift, par ^ dpar, gens)
        size += len(basis)
        cols = [derive(DiffPoly(sig, {b: Fraction(1)}), derivation).terms for b in basis]
        labels = list(extra_columns)
        for lab in labels:
            cols.append((-extra_columns[lab]).terms)
        sol = solve_columns(cols, part.terms)
        if sol is None:
            return Witness(density, derivation, None, size)
        w = DiffPoly(sig, {basis[i]: v for i, v in sol.items() if i < len(basis)})
        for i, lab in enumerate(labels):
            solved_extra[lab] = sol.get(len(basis) + i, Fraction(0))
        if prefix:
            pre = DiffPoly(sig, {prefix: Fraction(1)})
            # D passes the parameter prefix: D(p W) = (-1)^|p| p D(W)
            if dpar and mono_parity(sig, prefix):
                w = -w
            w = pre * w
        total = total + w
    return Witness(density, derivation, total, size, solved_extra)


def reduce_exact_extended(density: DiffPoly, derivation: str = "D", **kw) -> Witness:
    """Witness W with derivation(W) == density, or an inconclusive failure.

    Unlike ``find_antiderivative`` the ansatz includes every generator
    registered in the ring, so witnesses such as D^{-1}(phi) for phi itself
    are found.
    """
    extra = set(kw.pop("extra_generators", ()))
    extra.update(density.sig.nonlocal_gens)
    return find_antiderivative(density, derivation, extra_generators=sorted(extra), **kw)


# time evolution of generators ----------------------------------------------------


def extend_rule(rule: EvolutionRule, generators, derivation_of=None) -> EvolutionRule:
    """Add time derivatives of nonlocal generators, computed through witnesses.

    d/dt D^{-1}(rho) = W with D W = d/dt rho; likewise for dx^{-1}.  The
    integration constant is zero.  Raises InconclusiveError when no witness
    exists in the ansatz space.
    """
    sig = rule.sig
    todo = set()
    for g in generators:
        sym = g.symbol if isinstance(g, NonlocalGenerator) else g
        todo.add(sym)
        todo.update(_related_generators(sig, sig.nonlocal_gens[sym].density))
        if sig.nonlocal_gens[sym].kind == "dx" and sig.susy == 1:
            todo.add(adjoin(sig.nonlocal_gens[sym].density, "D").symbol)
    rates = dict(rule.rates)
    current = rule
    for sym in sorted(todo, key=lambda s: (s[1], s)):
        if sym in rates:
            continue
        gen = sig.nonlocal_gens[sym]
        rho_t = prolong_time(current, gen.density)
        d = "D" if gen.kind == "D" else "dx"
        w = find_antiderivative(rho_t, d)
        if not w.found:
            raise InconclusiveError(f"no local witness for the time derivative of {gen.name}")
        rates[sym] = w.witness
        current = rule.with_rates(rates)
    return current


def verify_derivation_rules(gen: NonlocalGenerator) -> bool:
    """D(D(g)) == dx(g) for a generator of an N=1 ring."""
    p = gen.poly
    if p.sig.susy != 1:
        return True
    return derive(derive(p, "D"), "D") == derive(p, "dx")


# charges ---------------------------------------------------------------------


def _charge_check(claim, anchor, rate, extra_columns=None):
    from .report import FAIL, INCONCLUSIVE, PASS, Check

    w = find_antiderivative(rate, "D", extra_columns=extra_columns)
    if not w.found:
        chk = Check(claim, anchor, INCONCLUSIVE if extra_columns is None else FAIL, render_poly(rate))
        chk.notes.append(f"no witness in an ansatz space of {w.basis_size} monomials")
        return chk, w
    chk = Check(claim, anchor, PASS)
    chk.details["witness"] = render_poly(w.witness)
    return chk, w


def verify_nonlocal_charges(model) -> list:
    """Fermionic charges of a model, each certified by an explicit witness.

    N=1 superfield models: J_1/2 = int D^{-1} phi, J_3/2 = int (D^{-1} phi)^2 and
    J_5/2 = int [(D^{-1} phi)^3 + alpha D^{-1}(phi D phi)] with alpha solved for.
    Component models: int xi (or int xi_i for N=2) through the Euler test.
    """
    from .calculus import prolong_time
    from .models import component_form
    from .report import residual_check

    out = []
    sig = model.sig
    if sig.susy == 1:
        phi = sig.field("phi")
        omega_gen = adjoin(phi, "D")
        omega = omega_gen.poly
        gen = adjoin(phi * derive(phi, "D"), "D")
        rule = extend_rule(model.rule, [omega_gen, gen])
        anchor = "J_{k/2}: fermionic nonlocal charges"
        chk, _ = _charge_check(f"{model.name}.J1/2", anchor, prolong_time(rule, omega))
        chk.details["density"] = render_poly(omega)
        out.append(chk)
        chk, _ = _charge_check(f"{model.name}.J3/2", anchor, prolong_time(rule, omega * omega))
        chk.details["density"] = render_poly(omega * omega)
        out.append(chk)
        rate3 = prolong_time(rule, omega * omega * omega)
        chk, w = _charge_check(
            f"{model.name}.J5/2", anchor, rate3, extra_columns={"alpha": prolong_time(rule, gen.poly)}
        )
        if w.found:
            alpha = w.extra["alpha"]
            chk.constants["alpha"] = alpha
            chk.details["density"] = render_poly(omega * omega * omega + gen.poly.scale(alpha))
            chk.notes.append(
                "the reference form writes d^{-1}(phi D phi), which is not scale-homogeneous;"
                " with D^{-1}(phi D phi) the solved coefficient is the printed -6"
            )
        out.append(chk)
        comp = component_form(model)
        xi = comp.sig.field("xi")
        out.append(residual_check(f"{model.name}.J1/2.components", "J_1/2 = int xi", _euler_images(prolong_time(comp, xi))))
        return out
    comp = component_form(model)
    csig = comp.sig
    names = [n for n in ("xi", "xi1", "xi2") if n in csig.field_index and n in comp.rhs]
    for n in names:
        rate = prolong_time(comp, csig.field(n))
        expect = "zero"
        claim = f"{model.name}.int_{n}"
        if model.name == "kuper":
            expect = "nonzero"
            claim = f"{model.name}.J1/2.components"
        anchor = f"int {n} is conserved" if expect == "zero" else "int xi is not conserved for Kuper-KdV"
        chk = residual_check(claim, anchor, _euler_images(rate), expect=expect)
        if model.name == "skdv2@a=1":
            chk.notes.append("whether these charges start infinite towers is not decided by a finite computation")
        out.append(chk)
    return out


def _euler_images(p):
    from .calculus import euler

    return {f.name: euler(p, f.name) for f in p.sig.fields}


__all__ = [
    "verify_nonlocal_charges",
    "adjoin",
    "D_inverse",
    "dx_inverse",
    "find_antiderivative",
    "reduce_exact_extended",
    "extend_rule",
    "monomial_basis",
    "Witness",
    "InconclusiveError",
    "CircularDefinitionError",
]
