"""Command-line front end: parse expressions, derive flows, run verification suites.

Exit codes: 0 all checks pass, 1 a check failed or was inconclusive,
2 usage error, 3 truncation depth exhausted.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from . import models as M
from .parser import ParseError, parse
from .psdo import DEFAULT_DEPTH, DEFAULT_GEQ_ONE, GEQ_ONE_CONVENTIONS, DepthExhaustedError
from .render import render_poly
from .report import PASS, Check, VerificationReport, residual_check
from .suites import SUITES, UnknownSuiteError, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DEPTH = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _signatures():
    n1, n2 = M.n1_signature(), M.n2_signature()
    return {
        "n1": n1,
        "n2": n2,
        "n1-components": M.components(n1).sig,
        "n2-components": M.components(n2).sig,
        "gardner": M.gardner_signature(),
    }


def _model(name, args):
    kw = {}
    if name.startswith("skdv2@"):
        kw["geq_one_convention"] = args.geq_one_convention
    try:
        return M.get_model(name, **kw)
    except (KeyError, ValueError) as e:
        raise UsageError(str(e).strip("'\"")) from None


# subcommands -----------------------------------------------------------------


def cmd_derive(args) -> VerificationReport:
    m = _model(args.model, args)
    if m.lax is None:
        raise UsageError(f"model {m.name} has no Lax pair")
    rep = VerificationReport(f"derive:{m.name}", config=_config(args))
    rep.add(M.check_lax_flow(m, args.depth))
    return rep


def cmd_components(args) -> VerificationReport:
    m = _model(args.model, args)
    rep = VerificationReport(f"components:{m.name}", config=_config(args))
    if m.name == "skdv":
        rep.add(M.check_skdv_components(3))
    elif m.name == "gardner":
        rep.extend(M.check_gardner_components())
    else:
        rule = M.component_form(m)
        chk = Check(f"{m.name}.components", "component form", PASS)
        for k in sorted(rule.rhs):
            chk.details[f"{k}_t"] = render_poly(rule[k])
        chk.notes.append("no reference component form is stored for this model")
        rep.add(chk)
    return rep


def _levels(text):
    try:
        if "," in text:
            levels = [int(x) for x in text.split(",") if x.strip()]
        else:
            levels = [2 * i + 1 for i in range(int(text))]
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must be a count N or a list like 1,3,5: {text!r}") from None
    if not levels or any(m <= 0 for m in levels):
        raise argparse.ArgumentTypeError("levels must be positive")
    return levels


def cmd_conserve(args) -> VerificationReport:
    m = _model(args.model, args)
    if m.lax is None:
        raise UsageError(f"model {m.name} has no Lax pair")
    rep = VerificationReport(f"conserve:{m.name}", config=_config(args) | {"levels": ",".join(map(str, args.levels))})
    rep.extend(M.check_lax_conservation(m, args.levels, args.depth))
    return rep


def cmd_gardner(args) -> VerificationReport:
    rep = VerificationReport("gardner", config=_config(args) | {"order": args.order})
    rep.extend(M.gardner_verify())
    rep.extend(M.check_gardner_components())
    rep.extend(M.check_gardner_expansion(args.order))
    return rep


def cmd_suite(args) -> VerificationReport:
    try:
        return run_suite(args.name, args.depth, args.geq_one_convention)
    except UnknownSuiteError as e:
        raise UsageError(e.args[0]) from None


def cmd_parse(args) -> VerificationReport:
    sig = _signatures()[args.signature]
    try:
        p = parse(args.expr, sig)
    except ParseError as e:
        raise UsageError(str(e)) from None
    rep = VerificationReport("parse", config={"signature": args.signature})
    text = render_poly(p)
    if args.check:
        again = parse(text, sig)
        chk = residual_check("parse.round_trip", "render then parse gives the same polynomial", again - p)
    else:
        chk = Check("parse", "expression", PASS)
    chk.details["text"] = text
    chk.details["latex"] = render_poly(p, "latex")
    chk.details["parity"] = {0: "even", 1: "odd", None: "none"}.get(p.parity, p.parity)
    chk.details["degree"] = p.degree
    rep.add(chk)
    return rep


def _config(args):
    return {"depth": args.depth, "geq_one_convention": args.geq_one_convention}


# argument parsing ------------------------------------------------------------


def _common(defaults: bool) -> argparse.ArgumentParser:
    # shared flags are accepted before or after the subcommand
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--depth", type=int, default=d(DEFAULT_DEPTH), help=f"truncation depth (default {DEFAULT_DEPTH})")
    p.add_argument("--format", choices=("text", "latex", "json"), default=d("text"))
    p.add_argument(
        "--geq-one-convention", choices=GEQ_ONE_CONVENTIONS, default=d(DEFAULT_GEQ_ONE),
        help="basis elements kept by the >=1 projection of the a=1 Lax flow",
    )
    p.add_argument("-o", "--output", type=Path, default=d(None), help="write the report here instead of stdout")
    p.add_argument(
        "--plot", nargs="?", const=True, default=d(None), metavar="PNG",
        help="write a timing/status chart (default: next to --output, or <suite>.png)",
    )
    p.add_argument("--timings", action="store_true", default=d(False), help="include wall times in the report")
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="superkdv", parents=[_common(True)], description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _common(False)
    models = ", ".join(M.MODEL_NAMES)

    p = sub.add_parser("derive", parents=[common], help="derive a model's flow from its Lax pair")
    p.add_argument("model", help=models)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("components", parents=[common], help="component form of a model")
    p.add_argument("model", help=models)
    p.set_defaults(func=cmd_components)

    p = sub.add_parser("conserve", parents=[common], help="conservation of the sRes densities")
    p.add_argument("model", help=models)
    p.add_argument("--levels", type=_levels, default=[1, 3, 5], help="count N (levels 1,3,..,2N-1) or list 1,3,5")
    p.set_defaults(func=cmd_conserve)

    p = sub.add_parser("gardner", parents=[common], help="super Gardner identity and expansion")
    p.add_argument("--order", type=int, default=6)
    p.set_defaults(func=cmd_gardner)

    p = sub.add_parser("suite", parents=[common], help="run a verification suite")
    p.add_argument("name", help=", ".join(sorted(SUITES)))
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("parse", parents=[common], help="parse and render an expression")
    p.add_argument("expr")
    p.add_argument("--signature", choices=sorted(_signatures()), default="n1")
    p.add_argument("--check", action="store_true", help="verify the render/parse round trip")
    p.set_defaults(func=cmd_parse)
    return ap


def _plot_path(args, report) -> Path | None:
    if not args.plot:
        return None
    if args.plot is not True:
        return Path(args.plot)
    if args.output:
        return args.output.with_suffix(".png")
    return Path(report.suite.replace(":", "_") + ".png")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.depth < 1:
        ap.error("--depth must be positive")
    try:
        report = args.func(args)
    except UsageError as e:
        print(f"superkdv: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DepthExhaustedError as e:
        print(f"superkdv: depth exhausted: {e} (try a larger --depth)", file=sys.stderr)
        return EXIT_DEPTH
    out = report.render(args.format, args.timings)
    if args.output:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        args.output.write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    path = _plot_path(args, report)
    if path is not None:
        from .plotting import plot_report

        plot_report(report, path)
        print(f"figure written to {path}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
