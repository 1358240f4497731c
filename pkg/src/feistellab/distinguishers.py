"""End-to-end distinguishing attacks.

Four attack shapes share one trial engine.  Each trial runs `n + 5`
inner iterations; an iteration prepares a uniform superposition over one
input register, applies the oracle as an XOR unitary (plus, for the
collision-statistic attacks, an extra XOR of the superposed register
into an output register), measures the designated register, uncomputes,
applies a Hadamard to the superposed register and samples a vector y.
The n+5 sampled vectors are stacked into a GF(2) system; the trial bit
x_k records whether the system has a nonzero solution.

Register indices are 0-based.  For the 4-register balanced layout
(in_a, in_b, out_c, out_d) the literal attack measures register 3
(out_d); register 2 (out_c) is the configuration under which the
three-round variant's measured statistic is provably injective.  Both
are exposed and reported.

Decision rules: the three-round-variant attack (alg1) answers SCHEME
only when every trial bit is 0; the collision attacks (alg2, alg3, gk)
answer RP when bits of 1 outnumber bits of 0, SCHEME otherwise (ties
included).

Besides the literal "stacked" statistic, a "per_coset" variant is
tallied from each iteration's collapse size: an iteration bit is 1 when
the collapse support shows a collision (alg1: size >= 2; collision
attacks: size == 2, the two-way-collision case), and the trial bit is
the strict majority of its iteration bits.  Trials always carry both
bits; the statistic_mode only selects which one drives the verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .gf2 import BitMatrix, nullspace_basis, smallest_nonzero
from .oracles import BlockParams, OracleInstance
from .qsim import RegisterLayout, run_script

ALG1 = "alg1"
ALG2 = "alg2"
ALG3 = "alg3"
ALG_GK = "gk"
ALGORITHMS = (ALG1, ALG2, ALG3, ALG_GK)

MODE_STACKED = "stacked"
MODE_PER_COSET = "per_coset"
MODES = (MODE_STACKED, MODE_PER_COSET)

SCHEME = "SCHEME"
RP = "RP"


def _expected_k(algorithm: str) -> Optional[int]:
    return {ALG1: 2, ALG2: 2, ALG3: 3}.get(algorithm)


def default_measured_register(algorithm: str, k: int) -> int:
    if algorithm in (ALG1, ALG3):
        return 3
    if algorithm == ALG2:
        return 2
    return k


def scheme_kind(algorithm: str) -> Tuple[str, int]:
    """(oracle kind, round count) of the scheme class each attack targets."""
    if algorithm == ALG1:
        return "vfs", 3
    if algorithm == ALG2:
        return "fs", 4
    if algorithm == ALG3:
        return "g", 4
    return "g", None  # gk: rounds = k + 1, filled in from k


def scheme_params(algorithm: str, n: int, k: int = 2) -> Tuple[str, BlockParams]:
    kind, d = scheme_kind(algorithm)
    if algorithm == ALG3:
        k = 3
    if algorithm in (ALG1, ALG2):
        k = 2
    if algorithm == ALG_GK:
        d = k + 1
    return kind, BlockParams(n, k, d)


@dataclass(frozen=True)
class AlgorithmConfig:
    """One attack's shape, budget, and statistic options."""

    algorithm: str
    params: BlockParams
    epsilon: Optional[float] = None
    q: Optional[int] = None
    samples_per_trial: Optional[int] = None
    measured_register: Optional[int] = None
    statistic_mode: str = MODE_STACKED

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.statistic_mode not in MODES:
            raise ConfigurationError(f"unknown statistic mode {self.statistic_mode!r}")
        expected = _expected_k(self.algorithm)
        if expected is not None and self.params.k != expected:
            raise ConfigurationError(
                f"{self.algorithm} needs k={expected}, got k={self.params.k}"
            )
        if self.algorithm == ALG_GK and self.params.k < 4:
            raise ConfigurationError(f"gk needs k >= 4, got k={self.params.k}")
        if self.q is None and self.epsilon is None:
            raise ConfigurationError("need either epsilon or an explicit q")
        if self.q is not None and self.q < 1:
            raise ConfigurationError("q must be >= 1")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError("epsilon must lie in (0, 1)")
        if self.samples_per_trial is not None and self.samples_per_trial < 1:
            raise ConfigurationError("samples_per_trial must be >= 1")
        self.layout().check_reg(self.resolved_register())

    def layout(self) -> RegisterLayout:
        n, k = self.params.n, self.params.k
        if self.algorithm in (ALG1, ALG2):
            return RegisterLayout((n, n, n, n))
        if self.algorithm == ALG3:
            return RegisterLayout((n,) * 6)
        return RegisterLayout((n,) * (2 * k))

    def superposed_register(self) -> int:
        return 1 if self.algorithm == ALG3 else 0

    def resolved_register(self) -> int:
        if self.measured_register is not None:
            return self.measured_register
        return default_measured_register(self.algorithm, self.params.k)

    def budget(self) -> int:
        if self.q is not None:
            return self.q
        return query_budget(self.algorithm, self.epsilon)

    def samples(self) -> int:
        if self.samples_per_trial is not None:
            return self.samples_per_trial
        return self.params.n + 5


def query_budget(algorithm: str, epsilon: float) -> int:
    """Trial budget for a target error: ceil(-log3 eps), x20 for the
    majority-rule attacks; never below 1."""
    if algorithm not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}")
    if not 0.0 < epsilon < 1.0:
        raise ConfigurationError("epsilon must lie in (0, 1)")
    factor = 1.0 if algorithm == ALG1 else 20.0
    x = -factor * math.log(epsilon) / math.log(3.0)
    if abs(x - round(x)) < 1e-9:
        x = round(x)
    return max(1, math.ceil(x))


def error_bound(algorithm: str, q: int) -> float:
    """Claimed error probability at budget q: 3^-q for alg1, else
    2^(3r)/3^(2r+1) with r = q/2."""
    if q < 1:
        raise ConfigurationError("q must be >= 1")
    if algorithm == ALG1:
        return 3.0 ** (-q)
    r = q / 2.0
    return 2.0 ** (3.0 * r) / 3.0 ** (2.0 * r + 1.0)


def check_oracle_shape(oracle: OracleInstance, config: AlgorithmConfig) -> None:
    if (oracle.params.n, oracle.params.k) != (config.params.n, config.params.k):
        raise ConfigurationError(
            f"oracle geometry n={oracle.params.n} k={oracle.params.k} does not "
            f"match config n={config.params.n} k={config.params.k}"
        )


def iteration_script(config: AlgorithmConfig, oracle: OracleInstance) -> List[tuple]:
    """The step sequence of one inner iteration (two oracle applications)."""
    check_oracle_shape(oracle, config)
    sup = config.superposed_register()
    meas = config.resolved_register()
    k = config.params.k
    if config.algorithm in (ALG1, ALG2):
        io = ("oracle", oracle, (0, 1), (2, 3))
    elif config.algorithm == ALG3:
        io = ("oracle", oracle, (0, 1, 2), (3, 4, 5))
    else:
        io = ("oracle", oracle, tuple(range(k)), tuple(range(k, 2 * k)))
    script = [("prepare", sup), io]
    if config.algorithm == ALG2:
        script.append(("xor", 0, 2))
    elif config.algorithm == ALG3:
        script.append(("xor", 1, 3))
    script.append(("measure", meas))
    if config.algorithm == ALG2:
        script.append(("xor", 0, 2))
    elif config.algorithm == ALG3:
        script.append(("xor", 1, 3))
    script.extend([io, ("hadamard", sup), ("sample", sup)])
    return script


@dataclass
class TrialOutcome:
    """Record of one trial: n+5 measurements, the stacked system, bits."""

    index: int
    measured_values: List[int]
    collapse_sizes: List[int]
    y_samples: List[int]
    nullspace_dim: int
    x_bit: int
    coset_bit: int
    solution: Optional[int]
    query_count: int

    def to_json_dict(self) -> dict:
        return {
            "trial": self.index,
            "measured_values": self.measured_values,
            "collapse_sizes": self.collapse_sizes,
            "y_samples": [f"{y:x}" for y in self.y_samples],
            "nullspace_dim": self.nullspace_dim,
            "x_bit": self.x_bit,
            "coset_bit": self.coset_bit,
            "solution": None if self.solution is None else f"{self.solution:x}",
            "query_count": self.query_count,
        }


@dataclass
class Verdict:
    """Decision over q trials, with the full trial records."""

    label: str
    algorithm: str
    q: int
    n0: int
    n1: int
    statistic_mode: str
    trials: List[TrialOutcome] = field(default_factory=list)

    @property
    def query_total(self) -> int:
        return sum(t.query_count for t in self.trials)


def _coset_bit(algorithm: str, sizes: Sequence[int], samples: int) -> int:
    if algorithm == ALG1:
        hits = sum(1 for s in sizes if s >= 2)
    else:
        hits = sum(1 for s in sizes if s == 2)
    return 1 if 2 * hits > samples else 0


def simon_trial(oracle: OracleInstance, config: AlgorithmConfig, rng, trial_index: int = 0) -> TrialOutcome:
    """Run one trial: n+5 iterations, stack the sampled vectors, solve."""
    layout = config.layout()
    script = iteration_script(config, oracle)
    samples = config.samples()
    n = config.params.n
    matrix = BitMatrix(n)
    measured: List[int] = []
    sizes: List[int] = []
    ys: List[int] = []
    queries = 0
    for _ in range(samples):
        _, records, calls = run_script(layout, script, rng)
        queries += calls
        record, y = records
        measured.append(record.value)
        sizes.append(record.preimage_size)
        ys.append(int(y))
        matrix = BitMatrix(n, matrix.rows + (int(y),))
    basis = nullspace_basis(matrix)
    dim = len(basis)
    return TrialOutcome(
        index=trial_index,
        measured_values=measured,
        collapse_sizes=sizes,
        y_samples=ys,
        nullspace_dim=dim,
        x_bit=1 if dim > 0 else 0,
        coset_bit=_coset_bit(config.algorithm, sizes, samples),
        solution=smallest_nonzero(basis, n),
        query_count=queries,
    )


def trial_bit(trial: TrialOutcome, statistic_mode: str) -> int:
    return trial.x_bit if statistic_mode == MODE_STACKED else trial.coset_bit


def decide(algorithm: str, bits: Sequence[int]) -> str:
    """Apply the decision rule to the trial bits."""
    n1 = sum(bits)
    if algorithm == ALG1:
        return SCHEME if n1 == 0 else RP
    return RP if n1 > len(bits) - n1 else SCHEME


def run_distinguisher(oracle: OracleInstance, config: AlgorithmConfig, rng) -> Verdict:
    """Run q trials and decide SCHEME vs RP."""
    q = config.budget()
    trials = [simon_trial(oracle, config, rng, i) for i in range(q)]
    bits = [trial_bit(t, config.statistic_mode) for t in trials]
    n1 = sum(bits)
    return Verdict(
        label=decide(config.algorithm, bits),
        algorithm=config.algorithm,
        q=q,
        n0=q - n1,
        n1=n1,
        statistic_mode=config.statistic_mode,
        trials=trials,
    )


def _config_for(oracle: OracleInstance, algorithm: str, epsilon, q=None, **options) -> AlgorithmConfig:
    return AlgorithmConfig(
        algorithm=algorithm,
        params=BlockParams(oracle.params.n, oracle.params.k, oracle.params.d),
        epsilon=epsilon,
        q=q,
        **options,
    )


def algorithm1(oracle: OracleInstance, epsilon: float, rng, **options) -> Verdict:
    """Distinguish the permutation-middle three-round variant from RP."""
    return run_distinguisher(oracle, _config_for(oracle, ALG1, epsilon, **options), rng)


def algorithm2(oracle: OracleInstance, epsilon: float, rng, **options) -> Verdict:
    """Distinguish the four-round balanced network from RP."""
    return run_distinguisher(oracle, _config_for(oracle, ALG2, epsilon, **options), rng)


def algorithm3(oracle: OracleInstance, epsilon: float, rng, **options) -> Verdict:
    """Distinguish the four-round contracting network on three sub-blocks from RP."""
    return run_distinguisher(oracle, _config_for(oracle, ALG3, epsilon, **options), rng)


def algorithm_k_plus_1(oracle: OracleInstance, k: int, epsilon: float, rng, **options) -> Verdict:
    """Distinguish the (k+1)-round contracting network (k >= 4) from RP."""
    if k < 4:
        raise ConfigurationError(f"this attack needs k >= 4, got k={k}")
    if oracle.params.k != k:
        raise ConfigurationError(
            f"oracle has k={oracle.params.k}, attack was asked for k={k}"
        )
    return run_distinguisher(oracle, _config_for(oracle, ALG_GK, epsilon, **options), rng)


# ---------------------------------------------------------------------------
# classical ground truth for the measured statistic
# ---------------------------------------------------------------------------


def register_contents(oracle: OracleInstance, config: AlgorithmConfig) -> List[np.ndarray]:
    """Register values as functions of the superposed input, post statistic
    transform (the state every iteration measures, tabulated classically)."""
    check_oracle_shape(oracle, config)
    n, k = config.params.n, config.params.k
    mask = (1 << n) - 1
    i = np.arange(1 << n, dtype=np.int64)
    zero = np.zeros_like(i)
    if config.algorithm in (ALG1, ALG2):
        out = oracle.evaluate_many(i << n)
        c, d = (out >> n) & mask, out & mask
        if config.algorithm == ALG2:
            return [i, zero, i ^ c, d]
        return [i, zero, c, d]
    if config.algorithm == ALG3:
        out = oracle.evaluate_many(i << n)
        s1 = (out >> (2 * n)) & mask
        s2 = (out >> n) & mask
        s3 = out & mask
        return [zero, i, zero, i ^ s1, s2, s3]
    out = oracle.evaluate_many(i << ((k - 1) * n))
    outs = [(out >> (n * (k - 1 - j))) & mask for j in range(k)]
    return [i] + [zero] * (k - 1) + outs


def statistic_table(oracle: OracleInstance, config: AlgorithmConfig) -> np.ndarray:
    """Measured-register value per superposed input."""
    return register_contents(oracle, config)[config.resolved_register()]


def coset_census(oracle: OracleInstance, config: AlgorithmConfig) -> Dict[int, int]:
    """Full-domain fiber census of the measured statistic.

    Returns {multiplicity: number of fibers of that size}; the ground
    truth for measurement-collapse distributions.
    """
    values = statistic_table(oracle, config)
    _, fiber_sizes = np.unique(values, return_counts=True)
    sizes, counts = np.unique(fiber_sizes, return_counts=True)
    return {int(s): int(c) for s, c in zip(sizes, counts)}


def mean_fiber_size(census: Dict[int, int]) -> float:
    """Mean multiplicity over nonempty fibers."""
    total = sum(m * c for m, c in census.items())
    fibers = sum(census.values())
    return total / fibers


def collapse_size_law(census: Dict[int, int], n: int) -> Dict[int, float]:
    """P(measurement collapses to a support of size m) = m * #fibers(m) / 2^n."""
    return {m: m * c / float(1 << n) for m, c in census.items()}
