"""Sampling-matrix construction and Boolean group-testing primitives.

The test design lives on a (sensor x time) grid: a T x (K*N) binary matrix
whose k-th column block selects, for each of the T tests, the sensors pooled
at time step k. Column j addresses sensor ``j % N`` at time ``j // N``
(0-based; reports and the CLI print 1-based labels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import BudgetExceededError

DEFAULT_BRUTE_BUDGET = 10_000_000


def _own_bits(a, ndim: int) -> np.ndarray:
    arr = np.array(a, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-dimensional bit array, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("bit array entries must be 0 or 1")
    arr = arr.astype(np.uint8)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SamplingMatrix:
    """T x (K*N) binary test design partitioned into K column blocks."""

    bits: np.ndarray
    tests: int
    window: int
    n_sensors: int
    p: float

    def __post_init__(self):
        if self.tests < 1 or self.window < 1 or self.n_sensors < 1:
            raise ValueError("tests, window and n_sensors must all be >= 1")
        bits = _own_bits(self.bits, 2)
        if bits.shape != (self.tests, self.window * self.n_sensors):
            raise ValueError(
                f"bits shape {bits.shape} does not match "
                f"{self.tests} x {self.window * self.n_sensors}"
            )
        object.__setattr__(self, "bits", bits)

    @property
    def blocks(self) -> np.ndarray:
        """View of shape (tests, window, n_sensors); block k is bits[:, k, :]."""
        return self.bits.reshape(self.tests, self.window, self.n_sensors)


@dataclass(frozen=True, eq=False)
class FaultVector:
    """Per-(sensor, time) fault indicator over one window of K steps."""

    bits: np.ndarray
    window: int
    n_sensors: int

    def __post_init__(self):
        bits = _own_bits(self.bits, 1)
        if bits.shape[0] != self.window * self.n_sensors:
            raise ValueError(
                f"fault vector length {bits.shape[0]} != {self.window * self.n_sensors}"
            )
        object.__setattr__(self, "bits", bits)

    @property
    def sparsity(self) -> int:
        return int(self.bits.sum())

    def index_pairs(self) -> list[tuple[int, int]]:
        """Faulty entries as (sensor, time) pairs, 0-based, ordered by time."""
        flat = np.flatnonzero(self.bits)
        return [(int(j % self.n_sensors), int(j // self.n_sensors)) for j in flat]


@dataclass(frozen=True, eq=False)
class OutcomeVector:
    """Binary outcome of the T tests of one window."""

    bits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bits", _own_bits(self.bits, 1))

    def __len__(self) -> int:
        return self.bits.shape[0]


def generate_matrix(tests: int, window: int, n_sensors: int, p: float, seed) -> SamplingMatrix:
    """Draw a sampling matrix with i.i.d. Bernoulli(p) entries."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    bits = (rng.random((tests, window * n_sensors)) < p).astype(np.uint8)
    return SamplingMatrix(bits, tests, window, n_sensors, p)


def one_by_one_matrix(window: int, n_sensors: int) -> SamplingMatrix:
    """Design of the one-by-one baseline: T = N and every group is a singleton.

    Block k is the N x N identity, so test t tracks sensor t at every step.
    The Bernoulli parameter is not applicable and is stored as NaN.
    """
    eye = np.eye(n_sensors, dtype=np.uint8)
    bits = np.tile(eye, (1, window))
    return SamplingMatrix(bits, n_sensors, window, n_sensors, math.nan)


def boolean_encode(phi: SamplingMatrix, f: FaultVector) -> OutcomeVector:
    """Noise-free outcomes: g_t = OR_j (phi[t, j] AND f[j])."""
    if f.bits.shape[0] != phi.bits.shape[1]:
        raise ValueError(
            f"fault vector length {f.bits.shape[0]} != matrix columns {phi.bits.shape[1]}"
        )
    g = (phi.bits.astype(np.int64) @ f.bits.astype(np.int64)) > 0
    return OutcomeVector(g.astype(np.uint8))


def apply_noise(g: OutcomeVector, e: OutcomeVector) -> OutcomeVector:
    """Flip outcome bits where the error vector has ones (elementwise XOR)."""
    if len(g) != len(e):
        raise ValueError(f"outcome length {len(g)} != error length {len(e)}")
    return OutcomeVector(np.bitwise_xor(g.bits, e.bits))


def group_at(phi: SamplingMatrix, test: int, time: int) -> np.ndarray:
    """Sensor indices pooled by ``test`` at time step ``time`` (both 0-based)."""
    if not 0 <= test < phi.tests:
        raise ValueError(f"test index {test} out of range [0, {phi.tests})")
    if not 0 <= time < phi.window:
        raise ValueError(f"time index {time} out of range [0, {phi.window})")
    return np.flatnonzero(phi.blocks[test, time])


def nonempty_group_count(phi: SamplingMatrix) -> int:
    """Number of (test, time) cells whose group is nonempty."""
    return int(phi.blocks.any(axis=2).sum())


def is_d_disjunct(phi: SamplingMatrix, d: int, budget: int = DEFAULT_BRUTE_BUDGET) -> bool:
    """Certify d-disjunctness by brute force.

    True iff for every column c and every set S of d other columns some row
    has a 1 in c and 0 across all of S. Exhaustive by design: the check is
    an oracle for small matrices, so it refuses instances whose cost
    C(cols, d+1) * cols exceeds ``budget``.
    """
    n_cols = phi.bits.shape[1]
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if d + 1 > n_cols:
        raise ValueError(f"d+1 = {d + 1} exceeds the number of columns {n_cols}")
    cost = math.comb(n_cols, d + 1) * n_cols
    if cost > budget:
        raise BudgetExceededError(
            f"disjunctness check needs ~{cost} column-set tests, budget is {budget}"
        )
    # Columns as row-set bitmasks; c is separated from S iff c has a row
    # outside the union of S.
    masks = [int.from_bytes(np.packbits(col).tobytes(), "big") for col in phi.bits.T]
    for chosen in combinations(range(n_cols), d + 1):
        for c in chosen:
            union = 0
            for s in chosen:
                if s != c:
                    union |= masks[s]
            if masks[c] & ~union == 0:
                return False
    return True


def expected_chi2_upper_bound(tests: int, window: int, p: float, n_sensors: int) -> float:
    """Expected number of nonempty groups, T*K*(1 - (1-p)^N).

    Upper-bounds the average number of whiteness tests the sequential
    detector performs per window.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if tests < 1 or window < 1 or n_sensors < 1:
        raise ValueError("tests, window and n_sensors must all be >= 1")
    return tests * window * (1.0 - (1.0 - p) ** n_sensors)


def save_matrix(phi: SamplingMatrix, path) -> None:
    """Write the plain-text format: header ``T K N p``, then T rows of bits."""
    lines = [f"{phi.tests} {phi.window} {phi.n_sensors} {phi.p!r}"]
    lines.extend("".join(str(int(b)) for b in row) for row in phi.bits)
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path) -> SamplingMatrix:
    """Read a matrix written by :func:`save_matrix`."""
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValueError(f"{path}: empty matrix file")
    head = text[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: header must be 'T K N p', got {text[0]!r}")
    tests, window, n_sensors = (int(v) for v in head[:3])
    p = float(head[3])
    rows = text[1:]
    if len(rows) != tests:
        raise ValueError(f"{path}: expected {tests} rows, found {len(rows)}")
    width = window * n_sensors
    bits = np.empty((tests, width), dtype=np.uint8)
    for i, row in enumerate(rows):
        if len(row) != width or set(row) - {"0", "1"}:
            raise ValueError(f"{path}: row {i + 1} is not {width} binary digits")
        bits[i] = np.frombuffer(row.encode(), dtype=np.uint8) - ord("0")
    return SamplingMatrix(bits, tests, window, n_sensors, p)


def save_outcome(g: OutcomeVector, path) -> None:
    """Write an outcome vector as one line of 0/1 characters."""
    Path(path).write_text("".join(str(int(b)) for b in g.bits) + "\n")


def load_outcome(path) -> OutcomeVector:
    """Read an outcome vector written by :func:`save_outcome`."""
    line = Path(path).read_text().strip()
    if not line or set(line) - {"0", "1"}:
        raise ValueError(f"{path}: outcome file must hold one line of 0/1 characters")
    return OutcomeVector(np.frombuffer(line.encode(), dtype=np.uint8) - ord("0"))
