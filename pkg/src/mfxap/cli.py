"""Batch command-line interface.

    mfxap run CONFIG [--out CSV] [--trials N] [--seed S] [--decimation D]
    mfxap validate CONFIG
    mfxap summary CSV --threshold DB [--config CONFIG | --boundaries 0,2000,...]

``run`` writes one wide CSV (``iteration`` plus one MSD column per
variant, in dB) and prints a per-segment summary table.
"""

import argparse
import csv
import dataclasses
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_spec
from .errors import ConfigurationError
from .metrics import MsdCurve, summarize
from .sim import run_experiment

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_USAGE = 2


def format_csv(curves, decimation):
    """Render curves as CSV text (LF line endings, 9 significant digits)."""
    labels = list(curves)
    n = len(next(iter(curves.values()))) if curves else 0
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration"] + labels)
    for i in range(n):
        writer.writerow([str(i * decimation)] + [format(curves[lab].values[i], ".9g") for lab in labels])
    return buf.getvalue()


def read_csv(path):
    """Inverse of :func:`format_csv`: returns ``(curves, decimation)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "iteration":
        raise ConfigurationError(f"{path}: not an MSD CSV (header must start with 'iteration')")
    labels = rows[0][1:]
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(labels) + 1)
    its = data[:, 0]
    dec = int(its[1] - its[0]) if its.size > 1 else 1
    curves = {lab: MsdCurve(data[:, j + 1], dec) for j, lab in enumerate(labels)}
    return curves, dec


def _apply_overrides(spec, args):
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.decimation is not None:
        changes["decimation"] = args.decimation
    if args.out is not None:
        changes["output"] = str(args.out)
    return dataclasses.replace(spec, **changes) if changes else spec


def cmd_run(args):
    spec = _apply_overrides(load_spec(args.config), args)
    out = Path(spec.output) if spec.output else Path(args.config).with_suffix(".csv")
    log.info("%s: L=%d, %d iterations, %d trials, %d variants",
             spec.name or args.config, spec.filter_length, spec.total_iterations, spec.trials, len(spec.variants))
    result = run_experiment(spec, progress=lambda label: log.info("finished %s", label))
    text = format_csv(result.curves, spec.decimation)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(result.summary(thresholds=tuple(args.threshold)).table())
    print(f"wrote {out}")
    if result.failures:
        print(f"{len(result.failures)} trial(s) diverged:", file=sys.stderr)
        for f in result.failures:
            print("  " + f.describe(), file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_validate(args):
    spec = load_spec(args.config)
    print(f"{args.config}: ok")
    print(f"  filter length {spec.filter_length}, plant density {spec.plant.density}")
    for k, ((start, end), sg) in enumerate(zip(spec.schedule.bounds(), spec.schedule.segments), 1):
        print(f"  segment {k}: iterations {start}-{end}, secondary density {sg.secondary.density}")
    for v in spec.variants:
        print(f"  {v.label}: {v.config.variant.value} K={v.config.order}")
    print(f"  {spec.trials} trials, decimation {spec.decimation}")
    return EXIT_OK


def cmd_summary(args):
    curves, dec = read_csv(args.csv)
    boundaries = None
    total = None
    if args.config is not None:
        spec = load_spec(args.config)
        boundaries, total = spec.schedule.starts, spec.total_iterations
    elif args.boundaries is not None:
        boundaries = [int(b) for b in args.boundaries.split(",")]
    print(summarize(curves, boundaries, total, thresholds=tuple(args.threshold)).table())
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="mfxap", description="Sparsity-aware filtered-x AP ANC experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write its MSD curves as CSV")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=None, help="CSV path (default: config output or <config>.csv)")
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--seed", type=int, default=None, help="base seed")
    run.add_argument("--decimation", type=int, default=None)
    run.add_argument("--threshold", type=float, action="append", default=None,
                     help="summary threshold in dB (repeatable, default -30)")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="parse and check a config without running it")
    val.add_argument("config", type=Path)
    val.set_defaults(func=cmd_validate)

    summ = sub.add_parser("summary", help="summarise a CSV written by 'run'")
    summ.add_argument("csv", type=Path)
    summ.add_argument("--threshold", type=float, action="append", required=True)
    where = summ.add_mutually_exclusive_group()
    where.add_argument("--config", type=Path, default=None, help="take segment boundaries from this config")
    where.add_argument("--boundaries", default=None, help="comma-separated segment start iterations")
    summ.set_defaults(func=cmd_summary)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threshold", None) is None:
        args.threshold = [-30.0]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
