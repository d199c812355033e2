"""Verification reports: one record per checked claim, rendered as text, LaTeX or JSON."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .render import render_poly

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
SCHEMA_VERSION = 1


@dataclass
class Check:
    """Outcome of one claim.

    ``residual`` is the rendered polynomial whose vanishing certifies the
    claim; for control claims (``expect="nonzero"``) the claim holds when
    the residual is nonzero, and the residual is the exhibited obstruction.
    """

    claim: str
    anchor: str
    status: str
    residual: str = "0"
    expect: str = "zero"
    constants: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == PASS

    def to_dict(self, timings: bool = False) -> dict:
        d = {
            "claim": self.claim,
            "anchor": self.anchor,
            "status": self.status,
            "expect": self.expect,
            "residual": self.residual,
            "constants": {k: str(v) for k, v in sorted(self.constants.items())},
            "details": {k: str(v) for k, v in sorted(self.details.items())},
            "notes": list(self.notes),
        }
        if timings:
            d["elapsed"] = round(self.elapsed, 6)
        return d


def residual_check(claim, anchor, residual, expect="zero", **kw) -> Check:
    """Build a check from a residual polynomial (or a list/dict of them)."""
    parts = _as_list(residual)
    nonzero = [p for p in parts if not p.is_zero()]
    if expect == "zero":
        status = PASS if not nonzero else FAIL
    else:
        status = PASS if nonzero else FAIL
    text = "; ".join(render_poly(p) for p in nonzero) if nonzero else "0"
    return Check(claim, anchor, status, text, expect, **kw)


def _as_list(residual):
    if isinstance(residual, dict):
        return [residual[k] for k in sorted(residual)]
    if isinstance(residual, (list, tuple)):
        return list(residual)
    return [residual]


def timed(fn, *args, **kw) -> Check:
    """Run a check builder and stamp its wall-clock time."""
    t0 = time.perf_counter()
    chk = fn(*args, **kw)
    chk.elapsed = time.perf_counter() - t0
    return chk


@dataclass
class VerificationReport:
    suite: str
    checks: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    groups: list = field(default_factory=list)  # (group name, seconds, number of checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, checks) -> None:
        self.checks.extend(checks)

    def ordered(self) -> list:
        return sorted(self.checks, key=lambda c: c.claim)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def counts(self) -> dict:
        out = {PASS: 0, FAIL: 0, INCONCLUSIVE: 0}
        for c in self.checks:
            out[c.status] += 1
        return out

    def to_dict(self, timings: bool = False) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "suite": self.suite,
            "config": {k: str(v) for k, v in sorted(self.config.items())},
            "summary": self.counts,
            "passed": self.passed,
            "checks": [c.to_dict(timings) for c in self.ordered()],
        } | ({"groups": [{"name": g, "elapsed": round(t, 6), "checks": n} for g, t, n in self.groups]} if timings else {})

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings), indent=2, ensure_ascii=False) + "\n"

    def to_text(self, timings: bool = False) -> str:
        lines = [f"suite {self.suite}"]
        for k, v in sorted(self.config.items()):
            lines.append(f"  {k} = {v}")
        width = max((len(c.claim) for c in self.checks), default=10)
        for c in self.ordered():
            t = f"  {c.elapsed:8.3f}s" if timings else ""
            lines.append(f"[{c.status.upper():^12}] {c.claim:<{width}}{t}  ({c.anchor})")
            if c.expect != "zero":
                lines.append(f"    expected nonzero residual: {c.residual}")
            elif c.residual != "0":
                lines.append(f"    residual: {c.residual}")
            for k, v in sorted(c.constants.items()):
                lines.append(f"    constant {k} = {v}")
            for k, v in sorted(c.details.items()):
                lines.append(f"    {k}: {v}")
            for n in c.notes:
                lines.append(f"    note: {n}")
        n = self.counts
        lines.append(f"{n[PASS]} passed, {n[FAIL]} failed, {n[INCONCLUSIVE]} inconclusive")
        return "\n".join(lines) + "\n"

    def to_latex(self) -> str:
        rows = [
            r"\begin{tabular}{lll}",
            r"\hline claim & status & residual \\ \hline",
        ]
        for c in self.ordered():
            res = c.residual.replace("_", r"\_").replace("*", " ")
            rows.append(rf"\texttt{{{_tex_escape(c.claim)}}} & {c.status} & $\scriptstyle {res}$ \\")
        rows.append(r"\hline")
        rows.append(r"\end{tabular}")
        return "\n".join(rows) + "\n"

    def render(self, fmt: str = "text", timings: bool = False) -> str:
        if fmt == "json":
            return self.to_json(timings)
        if fmt == "latex":
            return self.to_latex()
        return self.to_text(timings)


def _tex_escape(s: str) -> str:
    for a, b in (("\\", r"\textbackslash{}"), ("_", r"\_"), ("&", r"\&"), ("%", r"\%"), ("#", r"\#")):
        s = s.replace(a, b)
    return s


def fmt_const(c) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
