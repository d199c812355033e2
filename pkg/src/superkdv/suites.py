"""Named verification suites built from the model checks."""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import models as M
from .nonlocal_ext import InconclusiveError, verify_nonlocal_charges
from .psdo import DEFAULT_DEPTH, DEFAULT_GEQ_ONE
from .report import INCONCLUSIVE, Check, VerificationReport


class UnknownSuiteError(KeyError):
    pass


@dataclass
class Group:
    name: str
    build: object  # callable(config) -> Check | list[Check]


def _n1_groups():
    sk, ku = M.skdv(3), M.kuper()
    return [
        Group("lax_flow", lambda c: M.check_lax_flow(sk, c["depth"])),
        Group("components", lambda c: [M.check_skdv_components(3), M.check_skdv_components(0)]),
        Group("conservation", lambda c: M.check_lax_conservation(sk, (1, 3, 5, 7), c["depth"])),
        Group("H3", lambda c: M.check_h3_normalization(c["depth"])),
        Group("gardner.identity", lambda c: M.gardner_verify()),
        Group("gardner.components", lambda c: M.check_gardner_components()),
        Group("gardner.expansion", lambda c: M.check_gardner_expansion(6)),
        Group(
            "supersymmetry",
            lambda c: M.check_supersymmetry(sk) + M.check_supersymmetry(ku, expect="nonzero"),
        ),
        Group("hamiltonian.P2", lambda c: M.check_hamiltonian_n1(c["depth"])),
        Group(
            "hamiltonian.P1",
            lambda c: [
                M.first_hamiltonian_check(sk, c["depth"]),
                M.first_hamiltonian_check(ku, c["depth"], expect="nonzero"),
                _zero_flow(c["depth"]),
            ],
        ),
        Group("involutivity", lambda c: M.check_involutivity(c["depth"])),
        Group("roots", lambda c: M.check_root_identities(c["depth"]) + [M.fourth_root_check(c["depth"])]),
        Group("nonlocal", lambda c: verify_nonlocal_charges(sk) + verify_nonlocal_charges(ku)),
    ]


def _zero_flow(depth):
    chk = M.first_hamiltonian_check(M.skdv(3), depth, zero=True)
    chk.claim = "skdv.first_hamiltonian.zero_flow"
    return chk


def _n2_groups():
    out = []
    for a in (4, -2, 1):
        out.append(Group(f"a={a}.lax_flow", lambda c, a=a: M.check_lax_flow(_n2(a, c), c["depth"])))
        out.append(
            Group(f"a={a}.conservation", lambda c, a=a: M.check_lax_conservation(_n2(a, c), (1, 3, 5), c["depth"]))
        )
        out.append(Group(f"a={a}.supersymmetry", lambda c, a=a: M.check_supersymmetry(_n2(a, c))))
        out.append(Group(f"a={a}.nonlocal", lambda c, a=a: verify_nonlocal_charges(_n2(a, c))))
    out.append(Group("a=sym.hamiltonian", lambda c: M.check_hamiltonian_n2("a")))
    out.append(Group("a=sym.supersymmetry", lambda c: M.check_supersymmetry(M.skdv2("a"))))
    out.append(Group("a=1.reference_sign_control", lambda c: M.check_printed_a1_control(c["depth"])))
    return out


def _n2(a, config):
    return M.skdv2(a, geq_one_convention=config["geq_one_convention"])


SUITES = {"n1-core": _n1_groups, "n2-core": _n2_groups}


def run_suite(name: str, depth: int = DEFAULT_DEPTH, geq_one_convention: str = DEFAULT_GEQ_ONE,
              progress=None) -> VerificationReport:
    """Run every check group of a suite; the report is ordered by claim id.

    ``progress`` (optional) is called with (group name, seconds, checks).
    """
    if name not in SUITES:
        raise UnknownSuiteError(f"unknown suite {name!r}; known: {', '.join(sorted(SUITES))}")
    config = {"depth": depth, "geq_one_convention": geq_one_convention}
    report = VerificationReport(name, config=dict(config))
    for g in SUITES[name]():
        t0 = time.perf_counter()
        try:
            got = g.build(config)
        except InconclusiveError as e:
            got = Check(f"{name}.{g.name}", g.name, INCONCLUSIVE, notes=[str(e)])
        dt = time.perf_counter() - t0
        checks = got if isinstance(got, list) else [got]
        for chk in checks:
            chk.elapsed = dt / len(checks)
        report.extend(checks)
        report.groups.append((g.name, dt, len(checks)))
        if progress:
            progress(g.name, dt, checks)
    return report


__all__ = ["SUITES", "run_suite", "UnknownSuiteError"]
