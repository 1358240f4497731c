"""Shared fixtures: planted-period oracles and independent brute-force oracles."""

import numpy as np
import pytest

from feistellab.mixing import make_rng, mix64
from feistellab.oracles import BlockParams, OracleInstance, oracle_from_table


def planted_period_oracle(n: int, s: int, seed: int) -> OracleInstance:
    """Balanced-shape oracle whose second output has exact two-way fibers.

    The second output half is h(min(a, a ^ s)) with h an injective table,
    so measuring it collapses the input register to exactly {a, a ^ s}.
    """
    assert 0 < s < 1 << n
    h = make_rng(mix64(seed, 1)).permutation(1 << n)
    a = np.arange(1 << n, dtype=np.int64)
    g = h[np.minimum(a, a ^ s)]
    blocks = np.arange(1 << (2 * n), dtype=np.int64)
    av, bv = blocks >> n, blocks & ((1 << n) - 1)
    table = (av << n) | (bv ^ g[av])
    return oracle_from_table("planted", BlockParams(n, 2, 1), table, seed)


def zero_round_oracle(kind: str, n: int, k: int, d: int) -> OracleInstance:
    """Construction with every round function identically zero."""
    from feistellab.oracles import RoundFunction

    in_bits = n * (k - 1)
    fns = tuple(
        RoundFunction(in_bits, n, np.zeros(1 << in_bits, dtype=np.uint32))
        for _ in range(d)
    )
    return OracleInstance(kind, BlockParams(n, k, d), 0, fns)


def exhaustive_nullspace(rows, cols):
    """All x with Mx = 0, by trying every vector (the brute-force oracle)."""
    out = []
    for x in range(1 << cols):
        if all(bin(r & x).count("1") % 2 == 0 for r in rows):
            out.append(x)
    return set(out)


def span_of(vectors):
    """All XOR combinations of the given vectors."""
    span = {0}
    for v in vectors:
        span |= {x ^ v for x in span}
    return span


def pair_loop_collisions(values) -> int:
    """O(m^2) collision-pair count (the independent oracle)."""
    values = list(values)
    return sum(
        1
        for i in range(len(values))
        for j in range(i + 1, len(values))
        if values[i] == values[j]
    )


@pytest.fixture
def rng():
    return make_rng(12345)
