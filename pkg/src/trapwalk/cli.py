"""Command-line entry point: ``trapwalk run|preset|fit|predict``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .analysis import DEFAULT_MARGIN, DEFAULT_T_MIN, detect_crossover, fit_stretch_exponent, predict
from .ensemble import WORKERS_ENV
from .errors import ConfigurationError, FitError
from .experiment import ExperimentSpec, SpecError, load_spec, run_experiment
from .fileio import dump_json, read_csv, write_json
from .presets import PRESETS, figure_presets

log = logging.getLogger("trapwalk")


def _execute(spec: ExperimentSpec, out: str | None, workers: int | None) -> int:
    try:
        result = run_experiment(spec, out, workers)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 3
    for path in result.written:
        print(path)
    for cell, msg in result.failures.items():
        print(f"FAILED {cell}: {msg}", file=sys.stderr)
    return 0 if result.ok else 1


def cmd_run(args) -> int:
    try:
        spec = load_spec(args.spec)
    except SpecError as exc:
        print(f"invalid spec {args.spec}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read {args.spec}: {exc}", file=sys.stderr)
        return 3
    return _execute(spec, args.out, args.workers)


def cmd_preset(args) -> int:
    try:
        spec = figure_presets(args.name, args.scale_m, args.scale_t, args.out, args.seed)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.dry_run:
        sys.stdout.write(dump_json(spec.to_dict()))
        return 0
    out = Path(spec.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "experiment.json", spec.to_dict())
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 3
    return _execute(spec, None, args.workers)


def cmd_fit(args) -> int:
    try:
        series = read_csv(args.curve)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        fit = detect_crossover(series, args.t_min, margin=args.margin, weighted=args.weighted)
        report = {"curve": str(args.curve), "fit": fit.to_dict()}
        if args.window:
            lo, hi = args.window
            b = fit_stretch_exponent(series, (lo, hi), args.weighted)
            report["window_fit"] = {"window": [lo, hi], **b._asdict()}
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(dump_json(report))
    return 0


def cmd_predict(args) -> int:
    try:
        pred = predict(args.rho, args.init)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(dump_json(pred.to_dict()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trapwalk", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    workers_help = f"worker processes (default: ${WORKERS_ENV} or 1)"

    r = sub.add_parser("run", help="run an experiment spec file")
    r.add_argument("spec")
    r.add_argument("--out", help="override output_dir")
    r.add_argument("--workers", type=int, help=workers_help)
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("preset", help="run a desk-scaled figure preset")
    pr.add_argument("name", choices=sorted(PRESETS))
    pr.add_argument("--scale-m", type=float, help="fraction of the published M to run")
    pr.add_argument("--scale-t", type=float, help="fraction of the published T to run")
    pr.add_argument("--out", help="output directory (default out/<name>)")
    pr.add_argument("--seed", type=int, default=20100807)
    pr.add_argument("--workers", type=int, help=workers_help)
    pr.add_argument("--dry-run", action="store_true", help="print the spec instead of running it")
    pr.set_defaults(func=cmd_preset)

    f = sub.add_parser("fit", help="fit a survival CSV")
    f.add_argument("curve")
    f.add_argument("--t-min", type=int, default=DEFAULT_T_MIN)
    f.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
    f.add_argument("--weighted", action="store_true")
    f.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"))
    f.set_defaults(func=cmd_fit)

    pd = sub.add_parser("predict", help="closed-form exponents for a trap density")
    pd.add_argument("--rho", type=float, required=True)
    pd.add_argument("--init", default="up", choices=["up", "down", "mixed", "symmetric"])
    pd.set_defaults(func=cmd_predict)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
