"""Classical collision-counting baselines.

Each statistic queries the oracle on the full 2^n input slice the
corresponding attack superposes over (m = 2^n queries), tabulates a
derived value per query, and counts colliding pairs
N = sum_v C(multiplicity(v), 2).  The separated expectations for the
random-permutation and scheme classes are attached to the report, and
the verdict thresholds at their midpoint 3 * 2^(n-2), boundary counted
as SCHEME.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .oracles import OracleInstance


@dataclass
class CollisionReport:
    """Outcome of one classical collision count against one oracle."""

    statistic: str
    n: int
    k: int
    m: int
    collisions: int
    expected_rp: float
    expected_scheme: float
    threshold: float
    verdict: str
    empirical_std: Optional[float] = None  # across-seed std, filled by campaigns

    def to_json_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "n": self.n,
            "k": self.k,
            "m": self.m,
            "collisions": self.collisions,
            "expected_rp": self.expected_rp,
            "expected_scheme": self.expected_scheme,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "empirical_std": self.empirical_std,
        }


def collision_pair_count(values: np.ndarray) -> int:
    """Number of pairs i < j with values[i] == values[j] (fiber histogram)."""
    _, counts = np.unique(values, return_counts=True)
    counts = counts.astype(np.int64)
    return int(np.sum(counts * (counts - 1) // 2))


def classical_verdict(report: CollisionReport) -> str:
    """SCHEME iff N >= 3 * 2^(n-2), the midpoint of the two expectations."""
    return "SCHEME" if report.collisions >= report.threshold else "RP"


def _report(statistic: str, oracle: OracleInstance, values: np.ndarray) -> CollisionReport:
    n = oracle.params.n
    report = CollisionReport(
        statistic=statistic,
        n=n,
        k=oracle.params.k,
        m=1 << n,
        collisions=collision_pair_count(values),
        expected_rp=float(1 << (n - 1)),
        expected_scheme=float(1 << n),
        threshold=3.0 * 2.0 ** (n - 2),
        verdict="",
    )
    report.verdict = classical_verdict(report)
    return report


def count_pairs_fs4(oracle: OracleInstance) -> CollisionReport:
    """Collisions of a ^ c over all (a, 0) queries of a balanced oracle."""
    if oracle.params.k != 2:
        raise ConfigurationError("fs4 statistic needs a balanced (k=2) oracle")
    n = oracle.params.n
    a = np.arange(1 << n, dtype=np.int64)
    out = oracle.evaluate_many(a << n)
    c = (out >> n) & ((1 << n) - 1)
    return _report("fs4", oracle, a ^ c)


def count_pairs_g34(oracle: OracleInstance) -> CollisionReport:
    """Collisions of I2 ^ S1 over queries (0, I2, 0) of a k=3 oracle."""
    if oracle.params.k != 3:
        raise ConfigurationError("g34 statistic needs a k=3 oracle")
    n = oracle.params.n
    i = np.arange(1 << n, dtype=np.int64)
    out = oracle.evaluate_many(i << n)
    s1 = (out >> (2 * n)) & ((1 << n) - 1)
    return _report("g34", oracle, i ^ s1)


def count_pairs_gk(oracle: OracleInstance, k: int) -> CollisionReport:
    """Collisions of S1 over queries (I1, 0, ..., 0) of a k>=4 oracle.

    With every sub-block but the first pinned to zero, the pair condition
    on the second input sub-block degenerates to plain S1 collisions.
    """
    if k < 4:
        raise ConfigurationError(f"this statistic needs k >= 4, got k={k}")
    if oracle.params.k != k:
        raise ConfigurationError(
            f"oracle has k={oracle.params.k}, statistic was asked for k={k}"
        )
    n = oracle.params.n
    i = np.arange(1 << n, dtype=np.int64)
    out = oracle.evaluate_many(i << ((k - 1) * n))
    s1 = (out >> ((k - 1) * n)) & ((1 << n) - 1)
    return _report("gk", oracle, s1)


STATISTICS = {
    "fs4": lambda oracle: count_pairs_fs4(oracle),
    "g34": lambda oracle: count_pairs_g34(oracle),
    "gk": lambda oracle: count_pairs_gk(oracle, oracle.params.k),
}
