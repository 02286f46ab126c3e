"""Command line front end.

Subcommands
-----------
simulate    --config FILE --out DIR
            config: {"model": {...}, "n": int, "seed": int}; writes
            sample.csv and a binary cache sample.bin into DIR.
estimate    --data FILE --lambda X --cutoff U (--clock SPEC | --empirical-laplace M J)
            [--intercept] [--freq-mode annulus|mc-cube] [--freq-count N]
            [--freq-seed S] [--out DIR]
            prints a report summary; with --out also writes report.csv and
            exponent.csv.
experiment  --config FILE [--out DIR] [--large]
figures     --runs FILE --out DIR

Config files are JSON; all CSVs use headers, UTF-8 and '.' decimals.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import harness, serialize
from .estimator import SolverConfig, build_design, solve
from .frequencies import annulus_quadrature, monte_carlo_cube
from .laplace import empirical_laplace_inverse, laplace_family
from .models import clock_from_dict
from .sim import sample_increments, stream
from .spectral import exponent_estimate


def _load_json(text_or_path: str) -> dict:
    """Accept an inline JSON object or a path to a JSON file."""
    s = text_or_path.strip()
    if s.startswith("{"):
        return json.loads(s)
    with open(text_or_path, encoding="utf-8") as fh:
        return json.load(fh)


def _cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    model = harness.model_from_dict(cfg["model"])
    sample = sample_increments(model, int(cfg["n"]), int(cfg.get("seed", 0)))
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "sample.csv")
    bin_path = os.path.join(args.out, "sample.bin")
    serialize.write_sample_csv(sample, csv_path)
    serialize.write_sample_cache(sample, bin_path)
    print(f"wrote {csv_path} and {bin_path} (n={sample.n}, d={sample.dim}, "
          f"model digest {sample.spec_digest})")
    return 0


def _cmd_estimate(args) -> int:
    path = args.data
    sample = (
        serialize.read_sample_csv(path)
        if path.endswith(".csv")
        else serialize.read_sample_cache(path)
    )
    if (args.clock is None) == (args.empirical_laplace is None):
        print("estimate: give exactly one of --clock or --empirical-laplace", file=sys.stderr)
        return 2
    if args.empirical_laplace is not None:
        m, order = args.empirical_laplace
        if sample.clock_increments is None:
            print("estimate: data file has no clock column 't'", file=sys.stderr)
            return 2
        if m > sample.n:
            print(f"estimate: --empirical-laplace m={m} exceeds sample size {sample.n}",
                  file=sys.stderr)
            return 2
        family = empirical_laplace_inverse(sample.clock_increments[:m], order)
    else:
        family = laplace_family(clock_from_dict(_load_json(args.clock)))

    if args.freq_mode == "annulus":
        scheme = annulus_quadrature(sample.dim, args.cutoff)
    else:
        scheme = monte_carlo_cube(
            sample.dim, args.cutoff, args.freq_count, stream(args.freq_seed, 3)
        )
    est = exponent_estimate(sample, family, scheme.freqs)
    rows = build_design(est, scheme, intercept=args.intercept)
    report = solve(
        rows, SolverConfig(lam=args.lam, cutoff=args.cutoff, intercept=args.intercept)
    )
    print(serialize.report_summary(report))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        serialize.write_report_csv(report, os.path.join(args.out, "report.csv"), n=sample.n)
        serialize.write_exponent_csv(est, os.path.join(args.out, "exponent.csv"))
        print(f"wrote {args.out}/report.csv and {args.out}/exponent.csv")
    return 0


def _cmd_experiment(args) -> int:
    raw = _load_json(args.config)
    if raw.get("large") and not args.large:
        print("experiment: config is marked large; rerun with --large", file=sys.stderr)
        return 2
    cfg = harness.config_from_dict(raw)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    records = harness.run_experiment(cfg)
    ok = sum(1 for r in records if r.status == "ok")
    print(f"{len(records)} runs ({ok} ok)" +
          (f"; results in {cfg.output_dir}" if cfg.output_dir else ""))
    return 0


def _cmd_figures(args) -> int:
    records = serialize.read_runs_csv(args.runs)
    harness.figures_export(records, args.out)
    print(f"wrote {args.out}/boxplot.csv and {args.out}/ranks.csv")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="levyvol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw increments and write sample files")
    p.add_argument("--config", required=True, help="JSON file or inline object")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the diffusion matrix from a sample file")
    p.add_argument("--data", required=True, help="sample.csv or binary cache")
    p.add_argument("--clock", help="clock spec, JSON file or inline object")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="nuclear penalty")
    p.add_argument("--cutoff", type=float, required=True, help="spectral cut-off U")
    p.add_argument("--intercept", action="store_true", help="estimate the jump-mass intercept")
    p.add_argument(
        "--empirical-laplace", nargs=2, type=int, metavar=("M", "J"),
        help="invert an empirical Laplace transform from the first M clock "
             "increments with series order J (requires a 't' column)",
    )
    p.add_argument("--freq-mode", choices=("annulus", "mc-cube"), default="annulus")
    p.add_argument("--freq-count", type=int, default=70)
    p.add_argument("--freq-seed", type=int, default=0)
    p.add_argument("--out", help="directory for report.csv / exponent.csv")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("experiment", help="run a seeded replication sweep")
    p.add_argument("--config", required=True, help="JSON file or inline object")
    p.add_argument("--out", help="override the config's output_dir")
    p.add_argument("--large", action="store_true",
                   help="confirm running a config marked \"large\": true")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("figures", help="export tidy plotting CSVs from runs.csv")
    p.add_argument("--runs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_figures)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
