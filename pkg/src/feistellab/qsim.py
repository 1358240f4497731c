"""Exact simulation of the attacks' quantum steps.

The states that appear in these algorithms are always supported on at
most 2^n basis labels (one per superposed input), so the working engine
stores only the nonzero amplitudes: a sorted array of packed basis labels
alongside complex amplitudes.  A dense 2^total statevector engine with
the same operation set is kept purely as a test reference.

Basis labels pack the registers of a layout with register 0 in the most
significant position.  Amplitudes are complex double precision even
though the algorithms only produce real dyadic values; normalization
drift is then observable instead of hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import CapacityError, ConfigurationError
from .oracles import OracleInstance

#: amplitudes below this magnitude are dropped (far under the rounding
#: accumulated by the <= 2n Hadamard layers any script applies)
PRUNE_EPS = 1e-15

#: dense reference engine refuses layouts beyond this many qubits
DENSE_QUBIT_CAP = 20

#: sparse labels are packed into int64
LABEL_BITS_CAP = 62


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered register widths; register 0 owns the top label bits."""

    widths: Tuple[int, ...]

    def __post_init__(self):
        if not self.widths or any(w < 1 for w in self.widths):
            raise ConfigurationError("register widths must all be >= 1")
        if self.total_bits > LABEL_BITS_CAP:
            raise CapacityError(
                f"layout needs {self.total_bits} label bits; cap is {LABEL_BITS_CAP}"
            )

    @property
    def total_bits(self) -> int:
        return sum(self.widths)

    def shift(self, reg: int) -> int:
        return sum(self.widths[reg + 1 :])

    def mask(self, reg: int) -> int:
        return (1 << self.widths[reg]) - 1

    def extract(self, labels, reg: int):
        return (labels >> self.shift(reg)) & self.mask(reg)

    def check_reg(self, reg: int) -> None:
        if not 0 <= reg < len(self.widths):
            raise ConfigurationError(f"register {reg} outside layout {self.widths}")


@dataclass
class MeasurementRecord:
    """Outcome of one projective register measurement."""

    register: int
    value: int
    preimage_size: int


class SparseState:
    """Pure state stored as (sorted labels, amplitudes).

    Instances are never mutated by the operations below; every operation
    returns a fresh state, so one state can back many measurement draws.
    """

    __slots__ = ("layout", "labels", "amps")

    def __init__(self, layout: RegisterLayout, labels, amps, *, _canonical=False):
        self.layout = layout
        labels = np.asarray(labels, dtype=np.int64)
        amps = np.asarray(amps, dtype=np.complex128)
        if not _canonical:
            keep = np.abs(amps) > PRUNE_EPS
            labels, amps = labels[keep], amps[keep]
            order = np.argsort(labels, kind="stable")
            labels, amps = labels[order], amps[order]
        self.labels = labels
        self.amps = amps

    @property
    def support_size(self) -> int:
        return len(self.labels)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def to_dict(self) -> dict:
        return {int(l): complex(a) for l, a in zip(self.labels, self.amps)}

    def probabilities(self) -> dict:
        return {int(l): float(abs(a) ** 2) for l, a in zip(self.labels, self.amps)}

    def register_marginal(self, reg: int) -> Tuple[np.ndarray, np.ndarray]:
        """Distinct values of a register and their probabilities, ascending."""
        self.layout.check_reg(reg)
        vals = self.layout.extract(self.labels, reg)
        uniq, inv = np.unique(vals, return_inverse=True)
        mass = np.bincount(inv, weights=np.abs(self.amps) ** 2)
        return uniq, mass


def uniform_over(layout: RegisterLayout, reg: int, values: Iterable[int]) -> SparseState:
    """Uniform superposition over the given values of one register, rest 0."""
    layout.check_reg(reg)
    vals = sorted(set(int(v) for v in values))
    if not vals:
        raise ConfigurationError("need at least one basis value")
    if vals[-1] > layout.mask(reg):
        raise ConfigurationError("value exceeds the register width")
    labels = np.asarray(vals, dtype=np.int64) << layout.shift(reg)
    amps = np.full(len(vals), 1.0 / math.sqrt(len(vals)), dtype=np.complex128)
    return SparseState(layout, labels, amps, _canonical=True)


def prepare_uniform(layout: RegisterLayout, superposed: int) -> SparseState:
    """|0..0> everywhere except a full uniform superposition on one register."""
    return uniform_over(layout, superposed, range(1 << layout.widths[superposed]))


def _gather_input(layout: RegisterLayout, labels: np.ndarray, regs: Sequence[int]) -> np.ndarray:
    x = np.zeros_like(labels)
    for r in regs:
        x = (x << layout.widths[r]) | layout.extract(labels, r)
    return x


def _scatter_xor(layout: RegisterLayout, labels: np.ndarray, regs: Sequence[int], values: np.ndarray) -> np.ndarray:
    out = labels
    rem = values
    for r in reversed(regs):
        out = out ^ ((rem & layout.mask(r)) << layout.shift(r))
        rem = rem >> layout.widths[r]
    return out


def _check_io(layout: RegisterLayout, oracle: OracleInstance, in_regs, out_regs) -> None:
    for r in tuple(in_regs) + tuple(out_regs):
        layout.check_reg(r)
    in_bits = sum(layout.widths[r] for r in in_regs)
    out_bits = sum(layout.widths[r] for r in out_regs)
    if in_bits != oracle.params.block_bits or out_bits != oracle.params.block_bits:
        raise ConfigurationError(
            f"oracle works on {oracle.params.block_bits}-bit blocks; registers "
            f"give {in_bits} in / {out_bits} out"
        )


def apply_oracle_xor(state: SparseState, oracle: OracleInstance, in_regs: Sequence[int], out_regs: Sequence[int]) -> SparseState:
    """XOR the oracle's output into out_regs, keyed on in_regs.

    A self-inverse relabeling: applying it twice restores the state, which
    is exactly the uncompute step of the algorithms.
    """
    _check_io(state.layout, oracle, in_regs, out_regs)
    x = _gather_input(state.layout, state.labels, in_regs)
    y = oracle.evaluate_many(x)
    labels = _scatter_xor(state.layout, state.labels, out_regs, y)
    return SparseState(state.layout, labels, state.amps.copy())


def apply_xor_regs(state: SparseState, src: int, dst: int) -> SparseState:
    """Replace the dst register with src ^ dst on every label; self-inverse."""
    layout = state.layout
    layout.check_reg(src)
    layout.check_reg(dst)
    if src == dst:
        raise ConfigurationError("src and dst registers must differ")
    if layout.widths[src] != layout.widths[dst]:
        raise ConfigurationError("src and dst registers must have equal widths")
    labels = state.labels ^ (layout.extract(state.labels, src) << layout.shift(dst))
    return SparseState(layout, labels, state.amps.copy())


def _draw_index(mass: np.ndarray, rng) -> int:
    cdf = np.cumsum(mass)
    u = rng.random() * cdf[-1]
    return min(int(np.searchsorted(cdf, u, side="right")), len(mass) - 1)


def measure_register(state: SparseState, reg: int, rng) -> Tuple[MeasurementRecord, SparseState]:
    """Projectively measure one register; collapse and renormalize.

    The value is drawn from the exact cumulative distribution over the
    distinct register values in ascending order (one uniform variate per
    measurement), so a fixed RNG stream fixes the outcome.
    """
    uniq, mass = state.register_marginal(reg)
    idx = _draw_index(mass, rng)
    value = int(uniq[idx])
    keep = state.layout.extract(state.labels, reg) == value
    amps = state.amps[keep] / math.sqrt(mass[idx])
    record = MeasurementRecord(reg, value, int(np.count_nonzero(keep)))
    return record, SparseState(state.layout, state.labels[keep], amps, _canonical=True)


def sample_register(state: SparseState, reg: int, rng) -> int:
    """Draw one value from the exact marginal of a register (no collapse)."""
    uniq, mass = state.register_marginal(reg)
    return int(uniq[_draw_index(mass, rng)])


def hadamard_register(state: SparseState, reg: int) -> SparseState:
    """Walsh-Hadamard transform on one register."""
    layout = state.layout
    layout.check_reg(reg)
    w = layout.widths[reg]
    shift = layout.shift(reg)
    x = layout.extract(state.labels, reg)
    rest = state.labels & ~(layout.mask(reg) << shift)
    ys = np.arange(1 << w, dtype=np.int64)
    signs = 1.0 - 2.0 * (np.bitwise_count(x[:, None] & ys[None, :]) & 1)
    contrib = state.amps[:, None] * signs * (2.0 ** (-w / 2.0))
    uniq_rest = np.unique(rest)
    if len(uniq_rest) == 1:
        out = contrib.sum(axis=0)[None, :]
    else:
        inv = np.searchsorted(uniq_rest, rest)
        out = np.zeros((len(uniq_rest), 1 << w), dtype=np.complex128)
        np.add.at(out, inv, contrib)
    labels = (uniq_rest[:, None] | (ys << shift)[None, :]).ravel()
    return SparseState(layout, labels, out.ravel())


def dump_state(state: SparseState) -> str:
    """Debug dump: one `label_hex amplitude_re amplitude_im` line per label."""
    lines = [
        f"{int(l):#x} {a.real:.17g} {a.imag:.17g}"
        for l, a in zip(state.labels, state.amps)
    ]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# scripts: a trial step sequence both engines can execute
#
#   ("prepare", reg)                    reset to the uniform-input state
#   ("oracle", oracle, in_regs, out_regs)
#   ("xor", src, dst)
#   ("measure", reg)                    appends a MeasurementRecord
#   ("hadamard", reg)
#   ("sample", reg)                     appends the sampled int
# ---------------------------------------------------------------------------


def run_script(layout: RegisterLayout, script: Sequence[tuple], rng) -> Tuple[SparseState, List, int]:
    """Execute a script on the sparse engine.

    Returns (final state, records, number of oracle applications).
    """
    state = None
    records: List = []
    oracle_calls = 0
    for op in script:
        name = op[0]
        if name == "prepare":
            state = prepare_uniform(layout, op[1])
            continue
        if state is None:
            raise ConfigurationError("script must start with a prepare step")
        if name == "oracle":
            state = apply_oracle_xor(state, op[1], op[2], op[3])
            oracle_calls += 1
        elif name == "xor":
            state = apply_xor_regs(state, op[1], op[2])
        elif name == "measure":
            record, state = measure_register(state, op[1], rng)
            records.append(record)
        elif name == "hadamard":
            state = hadamard_register(state, op[1])
        elif name == "sample":
            records.append(sample_register(state, op[1], rng))
        else:
            raise ConfigurationError(f"unknown script op {name!r}")
    return state, records, oracle_calls


# ---------------------------------------------------------------------------
# dense reference engine (testing only)
# ---------------------------------------------------------------------------


def _dense_check(layout: RegisterLayout) -> None:
    if layout.total_bits > DENSE_QUBIT_CAP:
        raise CapacityError(
            f"dense engine refuses {layout.total_bits} qubits (cap {DENSE_QUBIT_CAP})"
        )


def dense_prepare(layout: RegisterLayout, superposed: int) -> np.ndarray:
    _dense_check(layout)
    layout.check_reg(superposed)
    vec = np.zeros(1 << layout.total_bits, dtype=np.complex128)
    w = layout.widths[superposed]
    idx = np.arange(1 << w, dtype=np.int64) << layout.shift(superposed)
    vec[idx] = 2.0 ** (-w / 2.0)
    return vec


def dense_apply_oracle_xor(layout: RegisterLayout, vec: np.ndarray, oracle: OracleInstance, in_regs, out_regs) -> np.ndarray:
    _check_io(layout, oracle, in_regs, out_regs)
    all_labels = np.arange(len(vec), dtype=np.int64)
    y = oracle.evaluate_many(_gather_input(layout, all_labels, in_regs))
    mapped = _scatter_xor(layout, all_labels, out_regs, y)
    return vec[mapped]


def dense_apply_xor_regs(layout: RegisterLayout, vec: np.ndarray, src: int, dst: int) -> np.ndarray:
    if src == dst:
        raise ConfigurationError("src and dst registers must differ")
    if layout.widths[src] != layout.widths[dst]:
        raise ConfigurationError("src and dst registers must have equal widths")
    all_labels = np.arange(len(vec), dtype=np.int64)
    mapped = all_labels ^ (layout.extract(all_labels, src) << layout.shift(dst))
    return vec[mapped]


def _dense_marginal(layout: RegisterLayout, vec: np.ndarray, reg: int) -> np.ndarray:
    shaped = (np.abs(vec) ** 2).reshape([1 << w for w in layout.widths])
    axes = tuple(i for i in range(len(layout.widths)) if i != reg)
    return shaped.sum(axis=axes)


def dense_measure_register(layout: RegisterLayout, vec: np.ndarray, reg: int, rng) -> Tuple[MeasurementRecord, np.ndarray]:
    marg = _dense_marginal(layout, vec, reg)
    nz = np.flatnonzero(marg > 0.0)
    idx = _draw_index(marg[nz], rng)
    value = int(nz[idx])
    keep = layout.extract(np.arange(len(vec), dtype=np.int64), reg) == value
    out = np.where(keep, vec, 0.0) / math.sqrt(marg[value])
    size = int(np.count_nonzero(np.abs(out) > PRUNE_EPS))
    return MeasurementRecord(reg, value, size), out


def dense_sample_register(layout: RegisterLayout, vec: np.ndarray, reg: int, rng) -> int:
    marg = _dense_marginal(layout, vec, reg)
    nz = np.flatnonzero(marg > 0.0)
    return int(nz[_draw_index(marg[nz], rng)])


def _hadamard_matrix(w: int) -> np.ndarray:
    h1 = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    h = np.array([[1.0]])
    for _ in range(w):
        h = np.kron(h, h1)
    return h


def dense_hadamard_register(layout: RegisterLayout, vec: np.ndarray, reg: int) -> np.ndarray:
    shaped = vec.reshape([1 << w for w in layout.widths])
    moved = np.moveaxis(shaped, reg, -1)
    out = moved @ _hadamard_matrix(layout.widths[reg])
    return np.moveaxis(out, -1, reg).reshape(-1)


def run_script_dense(layout: RegisterLayout, script: Sequence[tuple], rng) -> Tuple[np.ndarray, List, int]:
    """Execute a script on the dense engine (mirrors run_script)."""
    _dense_check(layout)
    vec = None
    records: List = []
    oracle_calls = 0
    for op in script:
        name = op[0]
        if name == "prepare":
            vec = dense_prepare(layout, op[1])
            continue
        if vec is None:
            raise ConfigurationError("script must start with a prepare step")
        if name == "oracle":
            vec = dense_apply_oracle_xor(layout, vec, op[1], op[2], op[3])
            oracle_calls += 1
        elif name == "xor":
            vec = dense_apply_xor_regs(layout, vec, op[1], op[2])
        elif name == "measure":
            record, vec = dense_measure_register(layout, vec, op[1], rng)
            records.append(record)
        elif name == "hadamard":
            vec = dense_hadamard_register(layout, vec, op[1])
        elif name == "sample":
            records.append(dense_sample_register(layout, vec, op[1], rng))
        else:
            raise ConfigurationError(f"unknown script op {name!r}")
    return vec, records, oracle_calls


def dense_reference_run(script: Sequence[tuple], layout: RegisterLayout, seed: int):
    """One-shot dense execution; returns ({label: probability}, records)."""
    from .mixing import make_rng

    vec, records, _ = run_script_dense(layout, script, make_rng(seed))
    probs = np.abs(vec) ** 2
    nz = np.flatnonzero(probs > PRUNE_EPS**2)
    return {int(i): float(probs[i]) for i in nz}, records
