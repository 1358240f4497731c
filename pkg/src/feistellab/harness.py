"""Monte Carlo campaigns, aggregation, and reproducible reports.

A campaign runs `trials` fresh oracle instances per class (the scheme
the attack targets, and a random permutation), distinguishes each, and
aggregates confusion matrices, error rates with Wilson intervals, the
claimed error bound, per-class trial-bit rates, and exact query counts.
Oracle seeds derive as mix64(experiment_seed, class_tag, index), so any
single run can be reproduced in isolation; with equal seeds, serial and
worker-pool execution produce identical reports.

Reports carry both statistic modes side by side (the trials contain
both bits); the configured mode selects the headline numbers.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from hashlib import sha256
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._version import __version__
from .classical import STATISTICS
from .distinguishers import (
    ALG_GK,
    ALGORITHMS,
    MODE_PER_COSET,
    MODE_STACKED,
    RP,
    SCHEME,
    AlgorithmConfig,
    coset_census,
    decide,
    error_bound,
    scheme_params,
    simon_trial,
)
from .errors import CapacityError, ConfigurationError
from .mixing import MIXER_NAME, PRNG_NAME, make_rng, mix64, tag64
from .oracles import TABLE_BITS_CAP, BlockParams, build_oracle

RP_CLASS = "rp"

_CONFIG_KEYS = ("alg", "n", "k", "epsilon", "q", "trials", "seed", "measure-reg", "mode", "out")
_MODE_FILE_TO_INTERNAL = {"stacked": MODE_STACKED, "per-coset": MODE_PER_COSET}


def default_k(alg: str) -> int:
    return {"alg3": 3, ALG_GK: 4}.get(alg, 2)


@dataclass(frozen=True)
class ExperimentConfig:
    """One campaign: attack, geometry, budget, and trial count."""

    alg: str
    n: int
    k: Optional[int] = None
    epsilon: Optional[float] = None
    q: Optional[int] = None
    trials: int = 1
    seed: int = 0
    measure_reg: Optional[int] = None
    mode: str = "stacked"
    out: Optional[str] = None

    def __post_init__(self):
        if self.alg not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.alg!r}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.mode not in _MODE_FILE_TO_INTERNAL:
            raise ConfigurationError(f"mode must be one of {sorted(_MODE_FILE_TO_INTERNAL)}")
        aconfig = self.algorithm_config()  # nested invariants
        if aconfig.params.block_bits > TABLE_BITS_CAP:
            # every campaign builds random-permutation instances on the
            # full block, so refuse up front rather than mid-run
            raise CapacityError(
                f"campaign needs 2^{aconfig.params.block_bits}-entry permutation "
                f"tables; the desk-scale guard allows at most 2^{TABLE_BITS_CAP}"
            )

    @property
    def resolved_k(self) -> int:
        return self.k if self.k is not None else default_k(self.alg)

    def scheme(self) -> Tuple[str, BlockParams]:
        return scheme_params(self.alg, self.n, self.resolved_k)

    def algorithm_config(self) -> AlgorithmConfig:
        _, params = self.scheme()
        return AlgorithmConfig(
            algorithm=self.alg,
            params=params,
            epsilon=self.epsilon,
            q=self.q,
            measured_register=self.measure_reg,
            statistic_mode=_MODE_FILE_TO_INTERNAL[self.mode],
        )

    def to_text(self) -> str:
        values = {
            "alg": self.alg,
            "n": self.n,
            "k": self.k,
            "epsilon": self.epsilon,
            "q": self.q,
            "trials": self.trials,
            "seed": self.seed,
            "measure-reg": self.measure_reg,
            "mode": self.mode,
            "out": self.out,
        }
        lines = [f"{key}={values[key]}" for key in _CONFIG_KEYS if values[key] is not None]
        return "\n".join(lines) + "\n"


def config_from_text(text: str) -> ExperimentConfig:
    """Parse the flat key=value config format (CLI flags override it)."""
    fields: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigurationError(f"config line {lineno}: unknown key {key!r}")
        fields[key] = value
    return make_config(**{k.replace("-", "_"): v for k, v in fields.items()})


def make_config(**fields) -> ExperimentConfig:
    """Build a config from string or typed values (shared by CLI and files)."""
    converters = {
        "n": int, "k": int, "q": int, "trials": int, "seed": int,
        "measure_reg": int, "epsilon": float,
        "alg": str, "mode": str, "out": str,
    }
    typed = {}
    for key, value in fields.items():
        if value is None:
            continue
        if key not in converters:
            raise ConfigurationError(f"unknown config field {key!r}")
        try:
            typed[key] = converters[key](value)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key!r}: {value!r}") from exc
    return ExperimentConfig(**typed)


def wilson_interval(successes: int, total: int, z: float = 1.959963984540054) -> Tuple[float, float]:
    """95% Wilson score interval for a Bernoulli rate."""
    if total == 0:
        return 0.0, 1.0
    p = successes / total
    zz = z * z
    denom = 1.0 + zz / total
    center = (p + zz / (2.0 * total)) / denom
    half = z * math.sqrt(p * (1.0 - p) / total + zz / (4.0 * total * total)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# campaign execution
# ---------------------------------------------------------------------------


def _single_run(aconfig: AlgorithmConfig, kind: str, params: BlockParams,
                class_name: str, index: int, experiment_seed: int) -> dict:
    """One oracle instance, one full distinguishing run; pure in its seeds."""
    oracle_seed = mix64(experiment_seed, tag64(class_name), index)
    oracle = build_oracle(kind, params, oracle_seed)
    rng = make_rng(mix64(experiment_seed, tag64(class_name), index, tag64("trial-rng")))
    q = aconfig.budget()
    trials = [simon_trial(oracle, aconfig, rng, i) for i in range(q)]
    x_bits = [t.x_bit for t in trials]
    c_bits = [t.coset_bit for t in trials]
    sizes: Dict[int, int] = {}
    for t in trials:
        for s in t.collapse_sizes:
            sizes[s] = sizes.get(s, 0) + 1
    return {
        "class": class_name,
        "index": index,
        "oracle_seed": oracle_seed,
        "q": q,
        "verdict_stacked": decide(aconfig.algorithm, x_bits),
        "verdict_per_coset": decide(aconfig.algorithm, c_bits),
        "n1_stacked": sum(x_bits),
        "n1_per_coset": sum(c_bits),
        "query_total": sum(t.query_count for t in trials),
        "collapse_size_counts": sizes,
        "trials": [t.to_json_dict() for t in trials],
    }


def _worker(task: tuple) -> dict:
    return _single_run(*task)


@dataclass
class ExperimentReport:
    """Aggregated campaign output plus enough metadata to re-run it."""

    data: dict

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    def save(self, outdir: str) -> None:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
        with open(os.path.join(outdir, "trials.jsonl"), "w", encoding="utf-8") as fh:
            for run in self.data["runs"]:
                for trial in run["trials"]:
                    line = {"class": run["class"], "run": run["index"], **trial}
                    fh.write(json.dumps(line, sort_keys=True) + "\n")
        with open(os.path.join(outdir, "summary.csv"), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["alg", "n", "k", "q", "mode", "class", "scheme_verdicts", "rp_verdicts",
                 "error_rate", "wilson_low", "wilson_high", "claimed_bound",
                 "queries_per_run", "classical_queries"]
            )
            summary = self.data["summary"]
            for class_name, cell in self.data["confusion"][self.data["mode"]].items():
                writer.writerow([
                    self.data["config"]["alg"], self.data["config"]["n"],
                    self.data["config"]["k"], self.data["q"], self.data["mode"],
                    class_name, cell[SCHEME], cell[RP],
                    summary["error_rate"], summary["wilson_low"], summary["wilson_high"],
                    summary["claimed_bound"], summary["queries_per_run"],
                    summary["classical_queries"],
                ])


def run_campaign(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Run `trials` distinguishing runs per class and aggregate.

    The report is a pure function of (config, seed): runs execute on a
    worker pool when jobs > 1 but merge in submission order.
    """
    aconfig = config.algorithm_config()
    scheme_kind_name, params = config.scheme()
    classes = [(scheme_kind_name, scheme_kind_name), (RP_CLASS, "rp")]
    tasks = [
        (aconfig, kind, params, class_name, index, config.seed)
        for class_name, kind in classes
        for index in range(config.trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_worker, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        runs = [_single_run(*task) for task in tasks]

    q = aconfig.budget()
    n = config.n
    expected_per_run = 2 * q * (n + 5)
    for run in runs:
        if run["query_total"] != expected_per_run:
            raise AssertionError(
                f"query accounting broke: {run['query_total']} != {expected_per_run}"
            )

    scheme_class = classes[0][0]
    confusion = {}
    for mode_name, key in ((MODE_STACKED, "verdict_stacked"), (MODE_PER_COSET, "verdict_per_coset")):
        cells = {c: {SCHEME: 0, RP: 0} for c, _ in classes}
        for run in runs:
            cells[run["class"]][run[key]] += 1
        confusion[mode_name] = cells

    mode = aconfig.statistic_mode
    cells = confusion[mode]
    errors = cells[scheme_class][RP] + cells[RP_CLASS][SCHEME]
    total = 2 * config.trials
    low, high = wilson_interval(errors, total)
    bit_rates = {}
    for class_name, _ in classes:
        class_runs = [r for r in runs if r["class"] == class_name]
        trials_total = sum(r["q"] for r in class_runs)
        bit_rates[class_name] = {
            "x_bit_rate": sum(r["n1_stacked"] for r in class_runs) / trials_total,
            "coset_bit_rate": sum(r["n1_per_coset"] for r in class_runs) / trials_total,
        }
    collapse_sizes = {}
    for class_name, _ in classes:
        agg: Dict[str, int] = {}
        for r in runs:
            if r["class"] != class_name:
                continue
            for s, c in r["collapse_size_counts"].items():
                agg[str(s)] = agg.get(str(s), 0) + c
        collapse_sizes[class_name] = agg

    config_text = config.to_text()
    data = {
        "config": {
            "alg": config.alg, "n": config.n, "k": config.resolved_k,
            "epsilon": config.epsilon, "q": config.q, "trials": config.trials,
            "seed": config.seed, "measure_reg": aconfig.resolved_register(),
            "mode": mode,
        },
        "q": q,
        "mode": mode,
        "scheme_class": scheme_class,
        "confusion": confusion,
        "summary": {
            "error_rate": errors / total,
            "wilson_low": low,
            "wilson_high": high,
            "claimed_bound": error_bound(config.alg, q),
            "rate_given_scheme": cells[scheme_class][SCHEME] / config.trials,
            "rate_given_rp": cells[RP_CLASS][RP] / config.trials,
            "queries_per_trial": 2 * (n + 5),
            "queries_per_run": expected_per_run,
            "classical_queries": 1 << n,
        },
        "bit_rates": bit_rates,
        "bit_rate_references": {"rp": 2.0 / 3.0, "scheme": 1.0 / 3.0},
        "collapse_size_counts": collapse_sizes,
        "runs": runs,
        "metadata": {
            "version": __version__,
            "prng": PRNG_NAME,
            "mixer": MIXER_NAME,
            "config_hash": sha256(config_text.encode()).hexdigest(),
            "config_text": config_text,
            "generated_at": datetime.now(timezone.utc).isoformat(),
        },
    }
    return ExperimentReport(data)


def sweep(config: ExperimentConfig, axis: str, values: Sequence, jobs: int = 1) -> List[Tuple[object, ExperimentReport]]:
    """One campaign per value of n, q, or epsilon; validates all first."""
    if axis not in ("n", "q", "epsilon"):
        raise ConfigurationError(f"sweep axis must be n, q, or epsilon, got {axis!r}")
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    configs = []
    for value in values:
        if axis == "n":
            cfg = replace(config, n=int(value))
        elif axis == "q":
            cfg = replace(config, q=int(value), epsilon=None)
        else:
            cfg = replace(config, epsilon=float(value), q=None)
        cfg.algorithm_config()
        configs.append((value, cfg))
    return [(value, run_campaign(cfg, jobs=jobs)) for value, cfg in configs]


def sweep_csv(results: List[Tuple[object, ExperimentReport]], axis: str) -> str:
    """CSV summary of a sweep: query growth next to measured error."""
    lines = [f"{axis},q,queries_per_trial,queries_per_run,error_rate,claimed_bound"]
    for value, report in results:
        s = report.data["summary"]
        lines.append(
            f"{value},{report.data['q']},{s['queries_per_trial']},"
            f"{s['queries_per_run']},{s['error_rate']},{s['claimed_bound']}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# classical campaigns and censuses
# ---------------------------------------------------------------------------

_CLASSICAL_ALG = {"alg2": "fs4", "alg3": "g34", ALG_GK: "gk"}


def classical_statistic_for(alg: str) -> str:
    if alg not in _CLASSICAL_ALG:
        raise ConfigurationError(
            f"no classical collision baseline for {alg!r}; pick one of {sorted(_CLASSICAL_ALG)}"
        )
    return _CLASSICAL_ALG[alg]


def _classical_worker(task: tuple) -> dict:
    statistic, kind, params, class_name, index, experiment_seed = task
    oracle_seed = mix64(experiment_seed, tag64(class_name), index)
    oracle = build_oracle(kind, params, oracle_seed)
    report = STATISTICS[statistic](oracle)
    doc = report.to_json_dict()
    doc.update({"class": class_name, "index": index, "seed": oracle_seed})
    return doc


def run_classical(config: ExperimentConfig, jobs: int = 1) -> dict:
    """Collision counts for `trials` seeds per class, with aggregates."""
    statistic = classical_statistic_for(config.alg)
    kind, params = config.scheme()
    classes = [(kind, kind), (RP_CLASS, "rp")]
    tasks = [
        (statistic, oracle_kind, params, class_name, index, config.seed)
        for class_name, oracle_kind in classes
        for index in range(config.trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_classical_worker, tasks, chunksize=1))
    else:
        rows = [_classical_worker(task) for task in tasks]

    aggregates = {}
    scheme_class = classes[0][0]
    for class_name, _ in classes:
        ns = [r["collisions"] for r in rows if r["class"] == class_name]
        aggregates[class_name] = {
            "mean_collisions": float(np.mean(ns)),
            "empirical_std": float(np.std(ns, ddof=1)) if len(ns) > 1 else None,
            "runs": len(ns),
        }
    for row in rows:
        row["empirical_std"] = aggregates[row["class"]]["empirical_std"]
    correct = sum(
        1 for r in rows
        if (r["verdict"] == SCHEME) == (r["class"] == scheme_class)
    )
    return {
        "statistic": statistic,
        "n": config.n,
        "k": params.k,
        "m": 1 << config.n,
        "expected_rp": float(1 << (config.n - 1)),
        "expected_scheme": float(1 << config.n),
        "threshold": 3.0 * 2.0 ** (config.n - 2),
        "accuracy": correct / len(rows),
        "aggregates": aggregates,
        "rows": rows,
        "seed": config.seed,
    }


def classical_csv(result: dict) -> str:
    lines = ["statistic,n,k,seed,m,N,expected_rp,expected_scheme,verdict"]
    for row in result["rows"]:
        lines.append(
            f"{row['statistic']},{row['n']},{row['k']},{row['seed']},{row['m']},"
            f"{row['collisions']},{row['expected_rp']},{row['expected_scheme']},{row['verdict']}"
        )
    return "\n".join(lines) + "\n"


def run_census(config: ExperimentConfig, seeds: int = 1) -> dict:
    """Fiber censuses of the configured measured statistic over fresh seeds."""
    aconfig = config.algorithm_config()
    kind, params = config.scheme()
    classes = [(kind, kind), (RP_CLASS, "rp")]
    out = {}
    for class_name, oracle_kind in classes:
        totals: Dict[int, int] = {}
        for index in range(seeds):
            oracle = build_oracle(oracle_kind, params, mix64(config.seed, tag64(class_name), index))
            for size, count in coset_census(oracle, aconfig).items():
                totals[size] = totals.get(size, 0) + count
        fibers = sum(totals.values())
        mass = sum(m * c for m, c in totals.items())
        out[class_name] = {
            "histogram": {str(m): c for m, c in sorted(totals.items())},
            "mean_fiber_size": mass / fibers,
            "seeds": seeds,
        }
    return {"alg": config.alg, "n": config.n, "k": params.k,
            "measured_register": aconfig.resolved_register(), "classes": out}


def census_csv(result: dict) -> str:
    lines = ["class,multiplicity,fibers"]
    for class_name, info in result["classes"].items():
        for mult, fibers in info["histogram"].items():
            lines.append(f"{class_name},{mult},{fibers}")
    return "\n".join(lines) + "\n"
