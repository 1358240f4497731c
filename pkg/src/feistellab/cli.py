"""Command-line harness.

Subcommands: gen-oracle, run, sweep, census, classical.  Campaign flags
can also come from a flat key=value config file (--config); explicit
flags override file entries.  Exit codes: 0 success, 2 configuration
error, 3 capacity guard.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import CapacityError, ConfigurationError
from .harness import (
    ExperimentConfig,
    census_csv,
    classical_csv,
    make_config,
    run_campaign,
    run_census,
    run_classical,
    sweep,
    sweep_csv,
)
from .oracles import BlockParams, build_oracle

EXIT_CONFIG = 2
EXIT_CAPACITY = 3


def _add_campaign_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--alg", choices=["alg1", "alg2", "alg3", "gk"])
    parser.add_argument("--n", type=int, help="sub-block width in bits")
    parser.add_argument("--k", type=int, help="sub-blocks per block (alg3: 3, gk: >= 4)")
    parser.add_argument("--epsilon", type=float, help="target error in (0,1)")
    parser.add_argument("--q", type=int, help="explicit trial budget (overrides epsilon)")
    parser.add_argument("--trials", type=int, help="oracle instances per class")
    parser.add_argument("--seed", type=int, help="64-bit experiment seed")
    parser.add_argument("--measure-reg", type=int, dest="measure_reg",
                        help="0-based register to measure (default: the attack's literal register)")
    parser.add_argument("--mode", choices=["stacked", "per-coset"],
                        help="statistic driving the verdict")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")


def _campaign_config(args: argparse.Namespace, needs_budget: bool = True) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            base = {
                key.replace("-", "_"): value
                for key, value in (
                    line.strip().split("=", 1)
                    for line in fh
                    if line.strip() and not line.strip().startswith("#")
                )
            }
    for key in ("alg", "n", "k", "epsilon", "q", "trials", "seed", "measure_reg", "mode", "out"):
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    if "alg" not in base:
        raise ConfigurationError("an algorithm is required (--alg or config file)")
    if "n" not in base:
        raise ConfigurationError("a sub-block width is required (--n or config file)")
    if not needs_budget and "epsilon" not in base and "q" not in base:
        base["q"] = 1  # budget is irrelevant to censuses and classical counts
    return make_config(**base)


def _outdir(config: ExperimentConfig, fallback: str) -> str:
    out = config.out or fallback
    os.makedirs(out, exist_ok=True)
    return out


def _cmd_gen_oracle(args: argparse.Namespace) -> int:
    d = args.d if args.d is not None else (3 if args.kind == "vfs" else 1)
    params = BlockParams(args.n, args.k, d)
    oracle = build_oracle(args.kind, params, args.seed)
    doc = oracle.to_json_dict(include_tables=args.tables)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")
        print(f"wrote {args.out}")
    else:
        print(json.dumps(doc))
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config = _campaign_config(args)
    report = run_campaign(config, jobs=args.jobs)
    outdir = _outdir(config, "campaign-out")
    report.save(outdir)
    summary = report.data["summary"]
    print(f"campaign: {config.alg} n={config.n} q={report.data['q']} "
          f"trials={config.trials}/class mode={report.data['mode']}")
    for class_name, cell in report.data["confusion"][report.data["mode"]].items():
        print(f"  {class_name:>4}: SCHEME={cell['SCHEME']} RP={cell['RP']}")
    print(f"  error={summary['error_rate']:.4f} "
          f"wilson=[{summary['wilson_low']:.4f},{summary['wilson_high']:.4f}] "
          f"claimed_bound={summary['claimed_bound']:.4g}")
    print(f"  trial-bit rates (x_bit, reference scheme=1/3 rp=2/3): "
          + " ".join(f"{c}={r['x_bit_rate']:.3f}" for c, r in report.data["bit_rates"].items()))
    print(f"  queries/run={summary['queries_per_run']} classical={summary['classical_queries']}")
    print(f"wrote {outdir}/report.json")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _campaign_config(args)
    values = [v for v in args.values.split(",") if v]
    results = sweep(config, args.axis, values, jobs=args.jobs)
    outdir = _outdir(config, "sweep-out")
    for value, report in results:
        report.save(os.path.join(outdir, f"{args.axis}-{value}"))
    csv_text = sweep_csv(results, args.axis)
    path = os.path.join(outdir, "sweep.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(csv_text)
    print(csv_text, end="")
    print(f"wrote {path}")
    return 0


def _cmd_census(args: argparse.Namespace) -> int:
    config = _campaign_config(args, needs_budget=False)
    result = run_census(config, seeds=config.trials)
    outdir = _outdir(config, "census-out")
    path = os.path.join(outdir, "census.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(census_csv(result))
    for class_name, info in result["classes"].items():
        print(f"{class_name}: mean fiber size {info['mean_fiber_size']:.4f} "
              f"over {info['seeds']} seed(s)")
    print(f"wrote {path}")
    return 0


def _cmd_classical(args: argparse.Namespace) -> int:
    config = _campaign_config(args, needs_budget=False)
    result = run_classical(config, jobs=args.jobs)
    outdir = _outdir(config, "classical-out")
    path = os.path.join(outdir, "classical.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(classical_csv(result))
    print(f"classical {result['statistic']} at n={result['n']}: "
          f"m={result['m']} threshold={result['threshold']:.1f}")
    for class_name, agg in result["aggregates"].items():
        std = agg["empirical_std"]
        print(f"  {class_name:>4}: mean N={agg['mean_collisions']:.2f}"
              + (f" std={std:.2f}" if std is not None else ""))
    print(f"  accuracy at midpoint threshold: {result['accuracy']:.4f}")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feistellab",
        description="Distinguishing-attack laboratory for Feistel-style constructions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-oracle", help="build and serialize one oracle instance")
    gen.add_argument("--kind", required=True, choices=["fs", "vfs", "g", "rp"])
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int, default=2)
    gen.add_argument("--d", type=int, help="round count (default: 3 for vfs, else 1)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--tables", action="store_true", help="embed expanded tables")
    gen.add_argument("--out", help="output file (default: stdout)")
    gen.set_defaults(func=_cmd_gen_oracle)

    run = sub.add_parser("run", help="Monte Carlo distinguishing campaign")
    _add_campaign_flags(run)
    run.set_defaults(func=_cmd_run)

    swp = sub.add_parser("sweep", help="campaigns over an axis of n, q, or epsilon")
    _add_campaign_flags(swp)
    swp.add_argument("--axis", required=True, choices=["n", "q", "epsilon"])
    swp.add_argument("--values", required=True, help="comma-separated axis values")
    swp.set_defaults(func=_cmd_sweep)

    cen = sub.add_parser("census", help="classical fiber census of the measured statistic")
    _add_campaign_flags(cen)
    cen.set_defaults(func=_cmd_census)

    cls = sub.add_parser("classical", help="classical collision-count baseline")
    _add_campaign_flags(cls)
    cls.set_defaults(func=_cmd_classical)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity guard: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
