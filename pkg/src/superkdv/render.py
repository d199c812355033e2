"""Canonical text and LaTeX rendering of polynomials and operators."""

from __future__ import annotations

from fractions import Fraction

_LATEX_NAMES = {
    "phi": r"\phi",
    "Phi": r"\Phi",
    "chi": r"\chi",
    "xi": r"\xi",
    "xi1": r"\xi_1",
    "xi2": r"\xi_2",
    "sigma": r"\sigma",
    "eps": r"\epsilon",
    "eta": r"\eta",
    "eta1": r"\eta_1",
    "eta2": r"\eta_2",
    "theta": r"\theta",
    "theta1": r"\theta_1",
    "theta2": r"\theta_2",
}


def _pow(name, n):
    return name if n == 1 else f"{name}^{n}"


def render_symbol(sig, s, fmt: str = "text") -> str:
    if s[0] == 0:
        name = sig.params[s[1]].name
        return _LATEX_NAMES.get(name, name) if fmt == "latex" else name
    if s[0] == 2:
        gen = sig.nonlocal_gens[s]
        if fmt == "latex":
            inner = render_poly(gen.density, "latex")
            op = "D^{-1}" if gen.kind == "D" else r"\partial^{-1}"
            return f"({op}({inner}))"
        return s[2]
    name = sig.fields[s[1]].name
    if sig.susy == 2:
        _, _, a, b, k = s
    else:
        a, b, k = 0, 0, s[2]
        if sig.susy == 1:
            a, k = k % 2, k // 2
    if fmt == "latex":
        base = _LATEX_NAMES.get(name, name)
        if k:
            base = f"{base}_{{{'x' * k}}}"
        ds = ""
        if sig.susy == 1 and a:
            ds = "D"
        elif sig.susy == 2:
            ds = ("D_1" if a else "") + ("D_2" if b else "")
        return f"({ds}{base})" if ds else base
    out = name
    if k:
        out = f"dx^{k}({out})" if k > 1 else f"dx({out})"
    if sig.susy == 2:
        if b:
            out = f"D2({out})"
        if a:
            out = f"D1({out})"
    elif a:
        out = f"D({out})"
    return out


def _fmt_coeff(c: Fraction, fmt: str) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    if fmt == "latex":
        return rf"\frac{{{c.numerator}}}{{{c.denominator}}}"
    return f"{c.numerator}/{c.denominator}"


def render_mono(sig, m, fmt="text") -> str:
    parts = []
    i = 0
    while i < len(m):
        j = i
        while j < len(m) and m[j] == m[i]:
            j += 1
        sym = render_symbol(sig, m[i], fmt)
        n = j - i
        if fmt == "latex":
            parts.append(sym if n == 1 else f"{sym}^{{{n}}}")
        else:
            parts.append(_pow(sym, n))
        i = j
    return (" " if fmt == "latex" else "*").join(parts)


def render_poly(p, fmt: str = "text") -> str:
    """Deterministic rendering; text output re-parses to the same polynomial."""
    if not p.terms:
        return "0"
    sig = p.sig
    chunks = []
    for k, m in enumerate(sorted(p.terms)):
        c = p.terms[m]
        neg = c < 0
        a = -c if neg else c
        body = render_mono(sig, m, fmt)
        if not body:
            term = _fmt_coeff(a, fmt)
        elif a == 1:
            term = body
        else:
            term = _fmt_coeff(a, fmt) + (" " if fmt == "latex" else "*") + body
        if k == 0:
            chunks.append(("-" if neg else "") + term)
        else:
            chunks.append((" - " if neg else " + ") + term)
    return "".join(chunks)


def render_op(op, fmt: str = "text") -> str:
    """Operator terms ordered by descending order; coefficients act from the left."""
    from .psdo import order_of

    if not op.coeffs:
        return "0"
    sig = op.sig
    keys = sorted(op.coeffs, key=lambda k: (-order_of(sig.susy, k), k))
    parts = []
    for k in keys:
        c = render_poly(op.coeffs[k], fmt)
        b = _basis_name(sig.susy, k, fmt)
        if b:
            parts.append(f"({c}){' ' if fmt == 'latex' else '*'}{b}")
        else:
            parts.append(f"({c})")
    out = " + ".join(parts)
    if op.prec is not None:
        out += f" + O({_basis_name(sig.susy, op.prec - 1 if sig.susy == 1 else _prec_key(op.prec), fmt) or '1'})"
    return out


def _prec_key(o):
    # lowest-order basis element strictly below precision o (D-units)
    o -= 1
    return (o % 2, 0, (o - o % 2) // 2)


def _basis_name(susy, key, fmt):
    if susy == 1:
        j = key
        if j == 0:
            return ""
        return f"D^{{{j}}}" if fmt == "latex" else (f"D^{j}" if j != 1 else "D")
    a, b, k = key
    parts = []
    if a:
        parts.append("D_1" if fmt == "latex" else "D1")
    if b:
        parts.append("D_2" if fmt == "latex" else "D2")
    if k:
        if fmt == "latex":
            parts.append(r"\partial" if k == 1 else rf"\partial^{{{k}}}")
        else:
            parts.append("dx" if k == 1 else f"dx^{k}")
    return ("" if fmt == "latex" else "*").join(parts)


def render(value, fmt: str = "text") -> str:
    """Render a polynomial, operator or report as text, LaTeX or JSON."""
    if fmt not in ("text", "latex", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    if hasattr(value, "checks"):
        return value.render(fmt)
    one = render_poly if hasattr(value, "terms") else render_op
    if fmt != "json":
        return one(value, fmt)
    import json

    return json.dumps({"text": one(value, "text"), "latex": one(value, "latex")}, ensure_ascii=False)
