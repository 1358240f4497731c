"""GF(2) linear algebra on packed-bit rows.

Rows and solution vectors are plain Python ints used as bitsets.  Column
j of an n-column matrix is bit (n-1-j), so the integer order of vectors
matches their lexicographic order as bit strings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from .errors import ConfigurationError


@dataclass(frozen=True)
class BitMatrix:
    """Row-major matrix over GF(2); each row is an int with `cols` bits."""

    cols: int
    rows: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.cols < 0:
            raise ConfigurationError("cols must be non-negative")
        mask = (1 << self.cols) - 1
        for r in self.rows:
            if r < 0 or r & ~mask:
                raise ConfigurationError(f"row {r:#x} wider than {self.cols} bits")

    @property
    def row_count(self) -> int:
        return len(self.rows)


def append_row(m: BitMatrix, y: int) -> BitMatrix:
    """Return a copy of m with y appended as the last row."""
    return BitMatrix(m.cols, m.rows + (int(y),))


def _rref(rows: List[int], cols: int) -> Tuple[int, List[int], List[int]]:
    """Reduced row echelon form, pivoting on the first set bit (MSB first).

    Returns (rank, reduced nonzero rows, pivot bit positions).
    """
    work = list(rows)
    pivots = []
    top = 0
    for bit in range(cols - 1, -1, -1):
        probe = 1 << bit
        pivot = next((r for r in range(top, len(work)) if work[r] & probe), None)
        if pivot is None:
            continue
        work[top], work[pivot] = work[pivot], work[top]
        for r in range(len(work)):
            if r != top and work[r] & probe:
                work[r] ^= work[top]
        pivots.append(bit)
        top += 1
        if top == len(work):
            break
    return top, work[:top], pivots


def rank(m: BitMatrix) -> int:
    """GF(2) rank of m."""
    return _rref(list(m.rows), m.cols)[0]


def nullspace_basis(m: BitMatrix) -> List[int]:
    """Deterministic basis of {x : Mx = 0}, one vector per free column.

    An empty list means the nullspace is {0}.  The basis comes from the
    free-variable construction on the reduced echelon form, listed in
    descending free-bit order.
    """
    if m.cols < 1:
        raise ConfigurationError("nullspace needs at least one column")
    _, reduced, pivots = _rref(list(m.rows), m.cols)
    pivot_set = set(pivots)
    free_bits = [b for b in range(m.cols - 1, -1, -1) if b not in pivot_set]
    basis = []
    for f in free_bits:
        x = 1 << f
        for row, p in zip(reduced, pivots):
            if row & (1 << f):
                x |= 1 << p
        basis.append(x)
    return basis


def smallest_nonzero(basis: List[int], cols: int) -> int | None:
    """Smallest nonzero vector in the span of basis, or None if span = {0}."""
    if not basis:
        return None
    _, reduced, _ = _rref(list(basis), cols)
    return min(reduced)
