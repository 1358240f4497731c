"""Keyed oracle constructions, fully tabulated.

Four families share one interface: balanced Feistel networks (``fs``),
the three-round variant whose middle round function is a permutation
(``vfs``), contracting unbalanced networks (``g``), and uniformly random
permutations on the whole block (``rp``).  Every internal table is drawn
from a PCG64 stream seeded by SplitMix64(seed, table_index), so an
instance is reconstructible bit-for-bit from (kind, params, seed).

Blocks are packed integers with sub-block 0 in the most significant
position: a balanced block is a||b, an unbalanced one I1||I2||...||Ik.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import CapacityError, ConfigurationError
from .mixing import MIXER_NAME, PRNG_NAME, make_rng, mix64

KINDS = ("fs", "vfs", "g", "rp")

#: largest admissible lookup table, as a bit width
TABLE_BITS_CAP = 24

_FORMAT = "feistellab-oracle-v1"


@dataclass(frozen=True)
class BlockParams:
    """Geometry of a construction: k sub-blocks of n bits, d rounds."""

    n: int
    k: int = 2
    d: int = 1

    def __post_init__(self):
        if self.n < 1 or self.k < 2 or self.d < 1:
            raise ConfigurationError(
                f"need n >= 1, k >= 2, d >= 1, got n={self.n} k={self.k} d={self.d}"
            )
        if self.round_input_bits > TABLE_BITS_CAP:
            raise CapacityError(
                f"round-function table needs 2^{self.round_input_bits} entries; "
                f"the desk-scale guard allows at most 2^{TABLE_BITS_CAP}"
            )

    @property
    def block_bits(self) -> int:
        return self.n * self.k

    @property
    def round_input_bits(self) -> int:
        return self.n * (self.k - 1)


@dataclass
class RoundFunction:
    """Dense lookup table for one round function."""

    in_bits: int
    out_bits: int
    table: np.ndarray

    def __post_init__(self):
        self.table = np.asarray(self.table)
        if len(self.table) != 1 << self.in_bits:
            raise ConfigurationError(
                f"table has {len(self.table)} entries, expected 2^{self.in_bits}"
            )
        if len(self.table) and int(self.table.max()) >= 1 << self.out_bits:
            raise ConfigurationError(f"table entry exceeds {self.out_bits} bits")

    def apply(self, x: int) -> int:
        return int(self.table[x])


def feistel_round(f: RoundFunction, a: int, b: int) -> Tuple[int, int]:
    """One balanced round: (a, b) -> (b, a ^ f(b))."""
    n = f.in_bits
    if f.out_bits != n:
        raise ConfigurationError("balanced round function must map n bits to n bits")
    if not (0 <= a < 1 << n and 0 <= b < 1 << n):
        raise ConfigurationError(f"inputs must be {n}-bit words")
    return b, a ^ f.apply(b)


def feistel_round_inverse(f: RoundFunction, c: int, d: int) -> Tuple[int, int]:
    """Invert one balanced round: recover (a, b) from (b, a ^ f(b))."""
    return d ^ f.apply(c), c


def unbalanced_round(f: RoundFunction, words: Sequence[int], n: int) -> List[int]:
    """One contracting round on [I1..Ik].

    f eats the last (k-1) sub-blocks, its output is xored into the first,
    and the block is rotated left by one sub-block:
    [I1..Ik] -> [I2..Ik, I1 ^ f(I2||...||Ik)].
    """
    k = len(words)
    if f.in_bits != (k - 1) * n or f.out_bits != n:
        raise ConfigurationError(
            f"round function is {f.in_bits}->{f.out_bits} bits, "
            f"expected {(k - 1) * n}->{n}"
        )
    x = 0
    for w in words[1:]:
        x = (x << n) | w
    return list(words[1:]) + [words[0] ^ f.apply(x)]


def unbalanced_round_inverse(f: RoundFunction, words: Sequence[int], n: int) -> List[int]:
    """Invert one contracting round."""
    x = 0
    for w in words[:-1]:
        x = (x << n) | w
    return [words[-1] ^ f.apply(x)] + list(words[:-1])


def words_of(block: int, params: BlockParams) -> List[int]:
    """Split a packed block into its k sub-blocks, most significant first."""
    mask = (1 << params.n) - 1
    return [(block >> (params.n * (params.k - 1 - j))) & mask for j in range(params.k)]


def pack_words(words: Sequence[int], n: int) -> int:
    block = 0
    for w in words:
        block = (block << n) | w
    return block


@dataclass
class OracleInstance:
    """A tabulated keyed bijection on k*n-bit blocks.

    Immutable after construction; safe to share across trial workers.
    """

    kind: str
    params: BlockParams
    seed: int
    round_functions: Tuple[RoundFunction, ...] = ()
    permutation: Optional[np.ndarray] = None
    _inverse: Optional[np.ndarray] = field(default=None, repr=False)

    def evaluate(self, block: int) -> int:
        """Apply the construction to one packed block."""
        if not 0 <= block < 1 << self.params.block_bits:
            raise ConfigurationError(
                f"input {block:#x} outside the {self.params.block_bits}-bit block space"
            )
        if self.permutation is not None:
            return int(self.permutation[block])
        if self.params.k == 2:
            a, b = words_of(block, self.params)
            for f in self.round_functions:
                a, b = feistel_round(f, a, b)
            return pack_words((a, b), self.params.n)
        words = words_of(block, self.params)
        for f in self.round_functions:
            words = unbalanced_round(f, words, self.params.n)
        return pack_words(words, self.params.n)

    def evaluate_many(self, blocks: np.ndarray) -> np.ndarray:
        """Vectorized evaluate over an integer array of packed blocks."""
        blocks = np.asarray(blocks, dtype=np.int64)
        if self.permutation is not None:
            return self.permutation[blocks].astype(np.int64)
        n = self.params.n
        mask = (1 << n) - 1
        k = self.params.k
        words = [(blocks >> (n * (k - 1 - j))) & mask for j in range(k)]
        for f in self.round_functions:
            x = words[1]
            for w in words[2:]:
                x = (x << n) | w
            words = words[1:] + [words[0] ^ f.table[x].astype(np.int64)]
        out = words[0]
        for w in words[1:]:
            out = (out << n) | w
        return out

    def invert(self, block: int) -> int:
        """Apply the inverse construction (inverse rounds, or table lookup)."""
        if self.permutation is not None:
            if self._inverse is None:
                inv = np.empty_like(self.permutation)
                inv[self.permutation] = np.arange(len(self.permutation), dtype=inv.dtype)
                self._inverse = inv
            return int(self._inverse[block])
        if self.params.k == 2:
            a, b = words_of(block, self.params)
            for f in reversed(self.round_functions):
                a, b = feistel_round_inverse(f, a, b)
            return pack_words((a, b), self.params.n)
        words = words_of(block, self.params)
        for f in reversed(self.round_functions):
            words = unbalanced_round_inverse(f, words, self.params.n)
        return pack_words(words, self.params.n)

    def full_table(self) -> np.ndarray:
        """The whole bijection as an array indexed by input block."""
        if self.permutation is not None:
            return self.permutation
        if self.params.block_bits > TABLE_BITS_CAP:
            raise CapacityError(
                f"refusing to expand a 2^{self.params.block_bits}-entry table; "
                f"guard is 2^{TABLE_BITS_CAP}"
            )
        return self.evaluate_many(np.arange(1 << self.params.block_bits, dtype=np.int64))

    def to_json_dict(self, include_tables: bool = False) -> dict:
        doc = {
            "format": _FORMAT,
            "kind": self.kind,
            "n": self.params.n,
            "k": self.params.k,
            "d": self.params.d,
            "seed": self.seed,
            "prng": PRNG_NAME,
            "mixer": MIXER_NAME,
        }
        if include_tables:
            doc["tables"] = {
                "round_functions": [f.table.tolist() for f in self.round_functions],
                "permutation": None
                if self.permutation is None
                else self.permutation.tolist(),
            }
        return doc

    def save(self, path, include_tables: bool = False) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(include_tables), fh)
            fh.write("\n")


def _function_table(rng: np.random.Generator, in_bits: int, out_bits: int) -> np.ndarray:
    return rng.integers(0, 1 << out_bits, size=1 << in_bits, dtype=np.uint32)


def _permutation_table(rng: np.random.Generator, bits: int) -> np.ndarray:
    # numpy's Generator.permutation is a Fisher-Yates shuffle over the
    # PCG64 stream; the stream identity is pinned in serialized metadata.
    return rng.permutation(1 << bits).astype(np.uint32)


def build_oracle(kind: str, params: BlockParams, seed: int) -> OracleInstance:
    """Construct an oracle deterministically from (kind, params, seed).

    Table i draws from a PCG64 stream seeded with mix64(seed, i).
    """
    if kind not in KINDS:
        raise ConfigurationError(f"unknown oracle kind {kind!r}, expected one of {KINDS}")
    if kind in ("fs", "vfs") and params.k != 2:
        raise ConfigurationError(f"{kind} oracles are balanced; need k=2, got k={params.k}")
    if kind == "vfs" and params.d != 3:
        raise ConfigurationError(f"vfs oracles have exactly 3 rounds, got d={params.d}")

    def stream(i: int) -> np.random.Generator:
        return make_rng(mix64(seed, i))

    n = params.n
    if kind == "rp":
        if params.block_bits > TABLE_BITS_CAP:
            raise CapacityError(
                f"random permutation table needs 2^{params.block_bits} entries; "
                f"the desk-scale guard allows at most 2^{TABLE_BITS_CAP}"
            )
        return OracleInstance(kind, params, seed, (), _permutation_table(stream(0), params.block_bits))
    if kind == "vfs":
        f1 = RoundFunction(n, n, _function_table(stream(0), n, n))
        f2 = RoundFunction(n, n, _permutation_table(stream(1), n))
        f3 = RoundFunction(n, n, _function_table(stream(2), n, n))
        return OracleInstance(kind, params, seed, (f1, f2, f3))
    in_bits = params.round_input_bits
    fns = tuple(
        RoundFunction(in_bits, n, _function_table(stream(i), in_bits, n))
        for i in range(params.d)
    )
    return OracleInstance(kind, params, seed, fns)


def oracle_from_table(kind: str, params: BlockParams, table: np.ndarray, seed: int = 0) -> OracleInstance:
    """Wrap an explicit permutation table (diagnostics and test fixtures)."""
    table = np.asarray(table)
    if len(table) != 1 << params.block_bits:
        raise ConfigurationError("table length must be 2^(k*n)")
    if not np.array_equal(np.sort(table), np.arange(len(table))):
        raise ConfigurationError("table is not a permutation of the block space")
    return OracleInstance(kind, params, seed, (), table.astype(np.uint32))


def evaluate(oracle: OracleInstance, block: int) -> int:
    """Module-level alias for OracleInstance.evaluate."""
    return oracle.evaluate(block)


def oracle_from_json_dict(doc: dict) -> OracleInstance:
    if doc.get("format") != _FORMAT:
        raise ConfigurationError(f"unrecognized oracle format {doc.get('format')!r}")
    params = BlockParams(doc["n"], doc["k"], doc["d"])
    oracle = build_oracle(doc["kind"], params, doc["seed"])
    tables = doc.get("tables")
    if tables is not None:
        rebuilt = [f.table.tolist() for f in oracle.round_functions]
        if tables["round_functions"] != rebuilt:
            raise ConfigurationError("stored round-function tables do not match the seed")
        stored_perm = tables["permutation"]
        have_perm = None if oracle.permutation is None else oracle.permutation.tolist()
        if stored_perm != have_perm:
            raise ConfigurationError("stored permutation table does not match the seed")
    return oracle


def load_oracle(path) -> OracleInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return oracle_from_json_dict(json.load(fh))
