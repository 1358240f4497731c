"""Deterministic seed derivation.

Every random table and every trial in the lab draws from a numpy PCG64
stream whose seed is derived from a single 64-bit experiment seed through
the SplitMix64 avalanche mixer.  The mixer and PRNG names are recorded in
report metadata so a run can be reproduced bit-exactly from its report.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15

#: identifiers embedded in reports and serialized oracles
MIXER_NAME = "splitmix64"
PRNG_NAME = "pcg64"


def splitmix64(x: int) -> int:
    """One output step of SplitMix64 applied to the 64-bit value x."""
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64(*parts: int) -> int:
    """Fold integers into one 64-bit seed, avalanching after each part."""
    acc = 0
    for part in parts:
        acc = splitmix64(acc ^ (int(part) & MASK64))
    return acc


def tag64(text: str) -> int:
    """Stable 64-bit tag for a short label such as an oracle class name."""
    acc = splitmix64(len(text))
    for byte in text.encode("utf-8"):
        acc = splitmix64(acc ^ byte)
    return acc


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for the given 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed & MASK64))
