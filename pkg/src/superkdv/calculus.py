"""Derivations, component expansion and variational calculus in superspace."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .graded_ring import (
    EVEN,
    ODD,
    DiffPoly,
    GradedSubstitutionError,
    ParamSpec,
    FieldSpec,
    Signature,
    SignatureError,
    _sort_signed,
    mono_parity,
)

DERIVATION_PARITY = {"D": ODD, "D1": ODD, "D2": ODD, "dx": EVEN}
_ALLOWED = {0: {"dx"}, 1: {"D", "dx"}, 2: {"D1", "D2", "dx"}}


class UnsupportedDensityError(ValueError):
    """The density contains nonlocal generators where only local ones are allowed."""


class MissingRuleError(KeyError):
    """An evolution rule does not cover a field or nonlocal generator."""


# elementary derivations ----------------------------------------------------


def _derive_symbol(sig: Signature, s: tuple, kind: str):
    """Derivative of one symbol: ``None`` for zero, ``(sign, symbol)`` or a DiffPoly."""
    tag = s[0]
    if tag == 0:
        return None
    if tag == 1:
        if sig.susy == 2:
            _, f, a, b, k = s
            if kind == "dx":
                return 1, (1, f, a, b, k + 1)
            if kind == "D1":
                return (1, (1, f, 1, b, k)) if a == 0 else (1, (1, f, 0, b, k + 1))
            # D2 has to pass D1^a to reach the normal-ordered slot
            sign = -1 if a else 1
            return (sign, (1, f, a, 1, k)) if b == 0 else (sign, (1, f, a, 0, k + 1))
        _, f, k = s
        if sig.susy == 1:
            return 1, (1, f, k + (1 if kind == "D" else 2))
        return 1, (1, f, k + 1)
    gen = sig.nonlocal_gens[s]
    if sig.susy == 1:
        if gen.kind == "D":
            return gen.density if kind == "D" else derive(gen.density, "D")
        if kind == "dx":
            return gen.density
        from .nonlocal_ext import adjoin

        return adjoin(gen.density, "D").poly
    if sig.susy == 0 and gen.kind == "dx":
        return gen.density
    raise SignatureError(f"no derivation rule for nonlocal generator {gen.name} under {kind}")


def _derive_mono(sig: Signature, m: tuple, kind: str) -> dict:
    key = (kind, m)
    hit = sig.derive_cache.get(key)
    if hit is not None:
        return hit
    odd_d = DERIVATION_PARITY[kind] == ODD
    acc: dict = {}
    prefix_par = 0
    for i, s in enumerate(m):
        ds = _derive_symbol(sig, s, kind)
        sign0 = -1 if (odd_d and prefix_par) else 1
        if ds is not None:
            if isinstance(ds, tuple):
                sgn, t = ds
                sg, mono = _sort_signed(sig, m[:i] + (t,) + m[i + 1 :])
                if sg:
                    acc[mono] = acc.get(mono, 0) + sign0 * sgn * sg
            else:
                pre, post = m[:i], m[i + 1 :]
                for tm, c in ds.terms.items():
                    sg, mono = _sort_signed(sig, pre + tm + post)
                    if sg:
                        acc[mono] = acc.get(mono, 0) + sign0 * sg * c
        if sig.is_odd(s):
            prefix_par ^= 1
    acc = {k: Fraction(v) for k, v in acc.items() if v}
    sig.derive_cache[key] = acc
    return acc


def derive(p: DiffPoly, d: str) -> DiffPoly:
    """Apply the derivation ``d`` (one of ``D``, ``D1``, ``D2``, ``dx``) with the graded Leibniz rule."""
    sig = p.sig
    if d not in _ALLOWED[sig.susy]:
        raise SignatureError(f"derivation {d!r} is not available for N={sig.susy}")
    acc: dict = {}
    for m, c in p.terms.items():
        for mm, cc in _derive_mono(sig, m, d).items():
            acc[mm] = acc.get(mm, 0) + c * cc
    return DiffPoly(sig, acc)


def derive_word(p: DiffPoly, word) -> DiffPoly:
    """Apply derivations in sequence; ``word[0]`` acts first."""
    for d in word:
        p = derive(p, d)
    return p


def dx(p: DiffPoly, n: int = 1) -> DiffPoly:
    return derive_word(p, ["dx"] * n)


def jet_word(sig: Signature, s: tuple) -> list:
    """Derivations (innermost first) producing the jet ``s`` from its bare field."""
    if sig.susy == 2:
        _, _, a, b, k = s
        return ["dx"] * k + ["D2"] * b + ["D1"] * a
    if sig.susy == 1:
        return ["D"] * s[2]
    return ["dx"] * s[2]


# evolution rules -----------------------------------------------------------


@dataclass
class EvolutionRule:
    """Characteristic of an evolutionary derivation: field -> time derivative.

    ``rates`` gives the derivative of nonlocal generators; jets are prolonged
    by commuting the derivation with D, D1, D2 and dx.
    """

    sig: Signature
    rhs: dict
    rates: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self._jet_cache = {}
        par = None
        for fname, r in self.rhs.items():
            if fname not in self.sig.field_index:
                raise SignatureError(f"unknown field {fname!r}")
            if r.sig is not self.sig:
                raise SignatureError("rule right-hand side lives in another signature")
            rp = r.parity
            if rp in (None,):
                continue
            if rp == "mixed":
                raise GradedSubstitutionError(f"right-hand side for {fname} has mixed parity")
            fp = self.sig.fields[self.sig.field_index[fname]].parity
            q = (rp - fp) % 2
            if par is None:
                par = q
            elif par != q:
                raise GradedSubstitutionError("rule is not parity-homogeneous")
        self.parity = par or 0

    def __getitem__(self, fname) -> DiffPoly:
        return self.rhs[fname]

    def image(self, s: tuple) -> DiffPoly:
        hit = self._jet_cache.get(s)
        if hit is not None:
            return hit
        sig = self.sig
        if s[0] == 1:
            name = sig.fields[s[1]].name
            if name not in self.rhs:
                raise MissingRuleError(f"rule {self.name!r} has no entry for field {name!r}")
            r = derive_word(self.rhs[name], jet_word(sig, s))
        elif s[0] == 2:
            if s not in self.rates:
                raise MissingRuleError(f"rule {self.name!r} has no rate for {s[2]}")
            r = self.rates[s]
        else:
            r = sig.zero()
        self._jet_cache[s] = r
        return r

    def with_rates(self, rates: Mapping) -> "EvolutionRule":
        merged = dict(self.rates)
        merged.update(rates)
        return EvolutionRule(self.sig, dict(self.rhs), merged, self.name)

    def map(self, fn) -> "EvolutionRule":
        return EvolutionRule(self.sig, {k: fn(v) for k, v in self.rhs.items()}, dict(self.rates), self.name)


def prolong_time(rule: EvolutionRule, p: DiffPoly) -> DiffPoly:
    """Total derivative of ``p`` along the evolutionary derivation ``rule``."""
    sig = p.sig
    if sig is not rule.sig:
        raise SignatureError("rule and polynomial live in different signatures")
    odd_d = rule.parity == ODD
    acc: dict = {}
    for m, c in p.terms.items():
        prefix_par = 0
        for i, s in enumerate(m):
            if s[0] != 0:
                img = rule.image(s)
                sign0 = -c if (odd_d and prefix_par) else c
                pre, post = m[:i], m[i + 1 :]
                for tm, tc in img.terms.items():
                    sg, mono = _sort_signed(sig, pre + tm + post)
                    if sg:
                        acc[mono] = acc.get(mono, 0) + sg * sign0 * tc
            if sig.is_odd(s):
                prefix_par ^= 1
    return DiffPoly(sig, acc)


# component expansion -------------------------------------------------------

THETA_KEYS = {1: ("1", "theta"), 2: ("1", "theta1", "theta2", "theta2theta1")}

DEFAULT_COMPONENTS = {
    "phi": ("xi", "u"),
    "chi": ("sigma", "w"),
    "Phi": ("v", "xi1", "xi2", "u"),
}


class ComponentMap:
    """Dictionary between a superspace signature and its component ring.

    The component signature carries the anticommuting coordinates as its
    first parameters so that theta factors always sort to the front.
    """

    def __init__(self, sig: Signature, names: Mapping | None = None):
        if sig.susy not in (1, 2):
            raise SignatureError("component expansion needs an N=1 or N=2 signature")
        names = dict(DEFAULT_COMPONENTS, **(names or {}))
        self.super_sig = sig
        n = sig.susy
        thetas = ["theta"] if n == 1 else ["theta1", "theta2"]
        fields = []
        self.components = {}
        for f in sig.fields:
            comp = names.get(f.name) or tuple(f"{f.name}_{k}" for k in THETA_KEYS[n])
            self.components[f.name] = comp
            if n == 1:
                fields.append(FieldSpec(comp[0], f.parity, f.degree))
                fields.append(FieldSpec(comp[1], 1 - f.parity, f.degree + Fraction(1, 2)))
            else:
                fields.append(FieldSpec(comp[0], f.parity, f.degree))
                fields.append(FieldSpec(comp[1], 1 - f.parity, f.degree + Fraction(1, 2)))
                fields.append(FieldSpec(comp[2], 1 - f.parity, f.degree + Fraction(1, 2)))
                fields.append(FieldSpec(comp[3], f.parity, f.degree + 1))
        params = [ParamSpec(t, ODD, Fraction(-1, 2)) for t in thetas] + list(sig.params)
        self.sig = Signature(0, fields, params, label=f"components of {sig.label}")
        self.thetas = [self.sig.param(t) for t in thetas]
        self._jet_cache = {}

    def superfield(self, name: str) -> DiffPoly:
        """The theta expansion of a bare superfield."""
        c = self.components[name]
        S = self.sig
        if self.super_sig.susy == 1:
            return S.field(c[0]) + self.thetas[0] * S.field(c[1])
        t1, t2 = self.thetas
        return S.field(c[0]) + t1 * S.field(c[1]) + t2 * S.field(c[2]) + t2 * t1 * S.field(c[3])

    def theta_derivative(self, p: DiffPoly, i: int) -> DiffPoly:
        """Left derivative with respect to theta_i."""
        return param_left_derivative(p, self.thetas[i])

    def super_D(self, p: DiffPoly, i: int = 0) -> DiffPoly:
        """D_i = theta_i dx + d/dtheta_i acting on theta-expanded expressions."""
        return self.thetas[i] * derive(p, "dx") + self.theta_derivative(p, i)

    def _jet(self, s: tuple) -> DiffPoly:
        hit = self._jet_cache.get(s)
        if hit is not None:
            return hit
        ssig = self.super_sig
        if s[0] == 0:
            r = self.sig.param(ssig.params[s[1]].name)
        elif s[0] == 1:
            r = self.superfield(ssig.fields[s[1]].name)
            for d in jet_word(ssig, s):
                if d == "dx":
                    r = derive(r, "dx")
                else:
                    r = self.super_D(r, 0 if d in ("D", "D1") else 1)
        else:
            raise UnsupportedDensityError("component expansion of nonlocal generators is not supported")
        self._jet_cache[s] = r
        return r

    def lift(self, p: DiffPoly) -> DiffPoly:
        """The theta-expanded form of a superspace polynomial."""
        if p.sig is not self.super_sig:
            raise SignatureError("polynomial does not belong to this superspace signature")
        out = self.sig.zero()
        for m, c in p.terms.items():
            term = self.sig.const(c)
            for s in m:
                term = term * self._jet(s)
            out = out + term
        return out

    def expand(self, p: DiffPoly) -> dict:
        """Components keyed by theta monomial; theta factors are written on the left."""
        return self._split(self.lift(p))

    def top(self, p: DiffPoly) -> DiffPoly:
        """Integrand after Berezin integration over all thetas."""
        comps = self.expand(p)
        return comps["theta" if self.super_sig.susy == 1 else "theta2theta1"]

    def reassemble(self, comps: Mapping) -> DiffPoly:
        out = self.sig.zero()
        if self.super_sig.susy == 1:
            return comps["1"] + self.thetas[0] * comps["theta"]
        t1, t2 = self.thetas
        return comps["1"] + t1 * comps["theta1"] + t2 * comps["theta2"] + t2 * t1 * comps["theta2theta1"] + out

    def component_rule(self, rule: EvolutionRule) -> EvolutionRule:
        """Component form of a superspace evolution rule."""
        rhs = {}
        for fname, r in rule.rhs.items():
            comps = self.expand(r)
            names = self.components[fname]
            for key, cname in zip(THETA_KEYS[self.super_sig.susy], names):
                rhs[cname] = comps[key]
        return EvolutionRule(self.sig, rhs, name=f"{rule.name} (components)")

    def supersymmetry(self, i: int, eta: str) -> dict:
        """Component transformation delta F = eta (d/dtheta_i - theta_i dx) F for every field."""
        e = self.sig.param(eta)
        out = {}
        for fname in self.components:
            F = self.superfield(fname)
            dF = e * (self.theta_derivative(F, i) - self.thetas[i] * derive(F, "dx"))
            comps = self._split(dF)
            for key, cname in zip(THETA_KEYS[self.super_sig.susy], self.components[fname]):
                out[cname] = comps[key]
        return out

    def _split(self, lifted: DiffPoly) -> dict:
        # same bucketing as expand(), for an already lifted expression
        th = [next(iter(t_.terms))[0] for t_ in self.thetas]
        n = self.super_sig.susy
        buckets = {k: {} for k in THETA_KEYS[n]}
        for m, c in lifted.terms.items():
            present = tuple(s for s in m if s in th)
            rest = tuple(s for s in m if s not in th)
            if n == 1:
                key = "theta" if present else "1"
            elif len(present) == 2:
                key, c = "theta2theta1", -c
            elif present:
                key = "theta1" if present[0] == th[0] else "theta2"
            else:
                key = "1"
            buckets[key][rest] = buckets[key].get(rest, 0) + c
        return {k: DiffPoly(self.sig, v) for k, v in buckets.items()}


def param_left_derivative(p: DiffPoly, param: DiffPoly) -> DiffPoly:
    """Left derivative with respect to a parameter symbol (used for d/dtheta)."""
    (ps,) = next(iter(param.terms))
    return left_derivative(p, ps)


def left_derivative(p: DiffPoly, target: tuple) -> DiffPoly:
    """Remove ``target`` from the left of each monomial, collecting Koszul signs."""
    sig = p.sig
    odd_t = sig.is_odd(target)
    acc: dict = {}
    for m, c in p.terms.items():
        n = m.count(target)
        if not n:
            continue
        i = m.index(target)
        sign = 1
        if odd_t and mono_parity(sig, m[:i]):
            sign = -1
        rest = m[:i] + m[i + 1 :]
        acc[rest] = acc.get(rest, 0) + sign * n * c
    return DiffPoly(sig, acc)


_COMPONENT_MAPS: dict = {}


def component_map(sig: Signature) -> ComponentMap:
    """The shared component map of a superspace signature (one component ring per signature)."""
    cm = _COMPONENT_MAPS.get(id(sig))
    if cm is None or cm.super_sig is not sig:
        cm = _COMPONENT_MAPS[id(sig)] = ComponentMap(sig)
    return cm


def expand_components(p: DiffPoly, names: Mapping | None = None) -> dict:
    cm = component_map(p.sig) if names is None else ComponentMap(p.sig, names)
    return cm.expand(p)


# variational calculus ------------------------------------------------------


def euler(density: DiffPoly, field_name: str) -> DiffPoly:
    """Variational derivative: delta int(density) = int(delta f * euler(density, f)).

    The integration-by-parts signs follow from int D(XY) = 0 with
    D(XY) = (DX)Y + (-1)^|X| X DY.
    """
    sig = density.sig
    if density.has_nonlocal():
        raise UnsupportedDensityError("euler operator needs a local density")
    fi = sig.field_index.get(field_name)
    if fi is None:
        raise SignatureError(f"unknown field {field_name!r}")
    fpar = sig.fields[fi].parity
    jets = sorted({s for m in density.terms for s in m if s[0] == 1 and s[1] == fi})
    out = sig.zero()
    for s in jets:
        Y = left_derivative(density, s)
        word = jet_word(sig, s)
        zpar = (fpar + sum(DERIVATION_PARITY[d] for d in word)) % 2
        sign = 1
        for d in reversed(word):
            dpar = DERIVATION_PARITY[d]
            zpar = (zpar - dpar) % 2
            Y = derive(Y, d)
            if dpar == EVEN:
                sign = -sign
            else:
                sign = sign if zpar else -sign
        out = out + (Y if sign > 0 else -Y)
    return out


def is_exact(density: DiffPoly) -> bool:
    """True iff the density integrates to zero over (super)space."""
    if density.has_nonlocal():
        raise UnsupportedDensityError("exactness test via the Euler operator needs a local density")
    return all(euler(density, f.name).is_zero() for f in density.sig.fields)


def euler_residual(density: DiffPoly) -> dict:
    return {f.name: euler(density, f.name) for f in density.sig.fields}


class Functional:
    """Integral of a density modulo total (super)derivatives."""

    def __init__(self, density: DiffPoly, name: str = ""):
        self.density = density
        self.sig = density.sig
        self.name = name

    def __eq__(self, other):
        if not isinstance(other, Functional):
            return NotImplemented
        return is_exact(self.density - other.density)

    __hash__ = None

    def __add__(self, other):
        return Functional(self.density + other.density)

    def __sub__(self, other):
        return Functional(self.density - other.density)

    def scale(self, c):
        return Functional(self.density.scale(c), self.name)

    def is_zero(self) -> bool:
        return is_exact(self.density)

    def gradient(self, field_name: str) -> DiffPoly:
        return euler(self.density, field_name)

    def __repr__(self):
        return f"Functional({self.density})"


def proportionality(p: DiffPoly, q: DiffPoly):
    """Rational c with p == c*q as functionals (compared through Euler images), else None."""
    sig = p.sig
    ep = {f.name: euler(p, f.name) for f in sig.fields}
    eq = {f.name: euler(q, f.name) for f in sig.fields}
    c = None
    for name in ep:
        a, b = ep[name], eq[name]
        if b.is_zero():
            if not a.is_zero():
                return None
            continue
        m = next(iter(sorted(b.terms)))
        c = a.coefficient(m) / b.coefficient(m)
        break
    if c is None:
        return Fraction(0) if all(v.is_zero() for v in ep.values()) else None
    for name in ep:
        if not (ep[name] - eq[name].scale(c)).is_zero():
            return None
    return c


def prolong_symmetry(transform: Mapping[str, DiffPoly], rule: EvolutionRule) -> dict:
    """delta(f_t) - d/dt(delta f) for every field; all zero certifies invariance."""
    sig = rule.sig
    for fname, val in transform.items():
        fpar = sig.fields[sig.field_index[fname]].parity
        vp = val.parity
        if vp == "mixed" or (vp is not None and vp != fpar):
            raise GradedSubstitutionError(f"transformation of {fname} has the wrong parity")
    delta = EvolutionRule(sig, dict(transform), name="symmetry")
    return {f: prolong_time(delta, rule.rhs[f]) - prolong_time(rule, transform[f]) for f in rule.rhs}
