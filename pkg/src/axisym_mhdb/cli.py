"""Command line entry point: ``axmhdb {run,verify,convergence,plot}``.

Exit status: 0 success, 1 a verification check failed, 2 bad usage,
configuration or name, 3 a time step failed (partial outputs are kept).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_STEP = 0, 1, 2, 3

log = logging.getLogger("axisym_mhdb")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="cap BLAS/OpenMP threads (results unchanged)")
    common.add_argument("--seed", type=int, default=None, help="reserved; there is no stochastic component")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="axmhdb", description="Swirl-free axisymmetric MHD-Boussinesq solver")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="integrate a configuration")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out", type=Path, default=None, help="output directory (overrides output.out_dir)")

    v = sub.add_parser("verify", parents=[common], help="run an acceptance suite")
    v.add_argument("suite", help="suite name, or 'all'")
    v.add_argument("--out", type=Path, default=None, help="also write the results as JSON here")

    c = sub.add_parser("convergence", parents=[common], help="refinement study")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path)
    src.add_argument("--manufactured", choices=["advection"], help="built-in exact-solution problem")
    c.add_argument("--levels", type=int, default=3)
    c.add_argument("--vary", choices=["space", "time"], default="space")
    c.add_argument("--dt-power", type=float, default=1.0, help="dt ~ h^p in space studies")
    c.add_argument("--out", type=Path, default=None, help="directory for convergence.json")

    pl = sub.add_parser("plot", parents=[common], help="SVG charts from diagnostics.csv")
    pl.add_argument("diagnostics", type=Path)
    pl.add_argument("quantities", nargs="+")
    pl.add_argument("--out", type=Path, default=None, help="directory (default: next to the csv)")
    pl.add_argument("--phi", type=int, choices=[1, 2, 3], default=None, help="overlay Phi_{k,c} envelope")
    pl.add_argument("--c-cap", type=float, default=1e3)
    return p


def _cmd_run(args) -> int:
    from .config import ConfigError, load_config
    from .output import write_run

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out if args.out is not None else Path(cfg.output.out_dir)
    result = write_run(cfg, out)
    print(f"t={result.final.t:.6g} steps={result.steps} records={len(result.records)} -> {out}")
    if not result.ok:
        print(f"step failure: {type(result.error).__name__}: {result.error}", file=sys.stderr)
        return EXIT_STEP
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import SUITES, run_suite

    names = list(SUITES) if args.suite == "all" else [args.suite]
    if names[0] not in SUITES:
        print(f"unknown suite '{args.suite}'; valid: all, {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    results = []
    for name in names:
        res = run_suite(name)
        print(res.report(), flush=True)
        results.append(res)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        payload = {
            r.name: {"passed": r.passed, "checks": [c.__dict__ for c in r.checks]} for r in results
        }
        (args.out / "verify.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def _cmd_convergence(args) -> int:
    from .config import ConfigError, load_config
    from .convergence import ConvergenceError, advection_mms_study, convergence_study

    try:
        if args.manufactured:
            report = advection_mms_study(args.levels)
        else:
            cfg = load_config(args.config)
            report = convergence_study(cfg, args.levels, args.vary, args.dt_power)
    except (ConfigError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"step failure: {exc}", file=sys.stderr)
        return EXIT_STEP
    print(report.table())
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "convergence.json").write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .output import read_diagnostics
    from .plotting import PLOTTABLE, plot_series

    unknown = [q for q in args.quantities if q not in PLOTTABLE]
    if unknown:
        print(f"unknown quantity {', '.join(unknown)}; valid: {', '.join(PLOTTABLE)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        series = read_diagnostics(args.diagnostics)
    except (OSError, ValueError) as exc:
        print(f"cannot read diagnostics: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out if args.out is not None else args.diagnostics.parent / "plots"
    try:
        paths = plot_series(series, args.quantities, out, args.phi, args.c_cap)
    except ValueError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for p in paths:
        print(p)
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "verify": _cmd_verify, "convergence": _cmd_convergence, "plot": _cmd_plot}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads is not None and args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        log.info("--seed %d accepted; no component is stochastic", args.seed)
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=args.threads):
        return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
