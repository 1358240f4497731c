"""feistellab: a desk-scale laboratory for distinguishing Feistel-style
constructions from random permutations.

The lab builds tabulated keyed oracles, runs hidden-period sampling
attacks against them on an exact sparse statevector engine, runs the
matching classical collision-count baselines, and aggregates Monte
Carlo campaigns into reproducible reports.
"""

from ._version import __version__
from .classical import (
    CollisionReport,
    classical_verdict,
    count_pairs_fs4,
    count_pairs_g34,
    count_pairs_gk,
)
from .distinguishers import (
    AlgorithmConfig,
    TrialOutcome,
    Verdict,
    algorithm1,
    algorithm2,
    algorithm3,
    algorithm_k_plus_1,
    coset_census,
    error_bound,
    query_budget,
    run_distinguisher,
    simon_trial,
)
from .errors import CapacityError, ConfigurationError, FeistelLabError
from .gf2 import BitMatrix, append_row, nullspace_basis, rank
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    run_campaign,
    run_census,
    run_classical,
    sweep,
    wilson_interval,
)
from .mixing import make_rng, mix64, splitmix64
from .oracles import (
    BlockParams,
    OracleInstance,
    RoundFunction,
    build_oracle,
    evaluate,
    feistel_round,
    load_oracle,
    oracle_from_table,
    unbalanced_round,
)
from .qsim import (
    MeasurementRecord,
    RegisterLayout,
    SparseState,
    apply_oracle_xor,
    apply_xor_regs,
    dense_reference_run,
    dump_state,
    hadamard_register,
    measure_register,
    prepare_uniform,
    run_script,
    run_script_dense,
    sample_register,
    uniform_over,
)

__all__ = [name for name in dir() if not name.startswith("_")]
