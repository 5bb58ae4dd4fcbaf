"""Fault-vector decoding from noisy group-testing outcomes.

The main decoder solves the LP relaxation of noisy Boolean compressed
sensing: minimize sum(f) + slack_weight * sum(xi) over the unit box, where a
positive test demands its pooled entries plus slack to reach 1 and a
negative test caps each pooled entry by the test's slack. A brute-force
minimum-mismatch search over all sparse fault vectors serves as the exact
oracle for small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import BudgetExceededError, NumericError
from .grouptest import DEFAULT_BRUTE_BUDGET, FaultVector, OutcomeVector, SamplingMatrix

# Nudges slack cost above the nominal weight so exact ties between "pay a
# test's slack" and "mark a fault" resolve toward the fault entry. Well
# above HiGHS's 1e-7 optimality tolerance, far below any modeled cost.
_SLACK_TIE_BREAK = 1e-5


@dataclass(frozen=True)
class DecoderConfig:
    """LP decoding knobs: slack penalty weight and rounding cutoff.

    At desk scale the LP optimum is heavily fractional (a 50-test design is
    far from d-disjunct), so the default cutoff keeps every entry with
    non-negligible mass; it is calibrated to put the decoded false-alarm
    rate near 1-2% in the reference scenario. Unique integral optima, e.g.
    noise-free outcomes of certified d-disjunct designs, decode exactly
    under any cutoff in (0, 1).
    """

    slack_weight: float = 1.0
    round_threshold: float = 0.025

    def __post_init__(self):
        if self.slack_weight < 0.0:
            raise ValueError(f"slack_weight must be >= 0, got {self.slack_weight}")
        if not 0.0 <= self.round_threshold <= 1.0:
            raise ValueError(f"round_threshold must lie in [0, 1], got {self.round_threshold}")


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Fractional LP optimum: fault relaxation, per-test slack, objective."""

    f_frac: np.ndarray
    slack: np.ndarray
    objective: float


def solve_lp(objective, a_ub, b_ub, bounds) -> tuple[np.ndarray, float]:
    """Minimize objective . x subject to a_ub x <= b_ub and box bounds.

    Thin wrapper around scipy's dual-simplex HiGHS backend, which returns a
    deterministic vertex solution on these small dense problems.
    """
    res = linprog(objective, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs-ds")
    if not res.success:
        raise NumericError(f"LP solver failed (status {res.status}): {res.message}")
    return res.x, float(res.fun)


def _decode_lp(phi: SamplingMatrix, g: OutcomeVector, cfg: DecoderConfig) -> LpSolution:
    n_cols = phi.bits.shape[1]
    n_tests = phi.tests
    if len(g) != n_tests:
        raise ValueError(f"outcome length {len(g)} != number of tests {n_tests}")

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    b_ub: list[float] = []
    row_at = 0
    for t in range(n_tests):
        support = np.flatnonzero(phi.bits[t])
        if g.bits[t]:
            # sum of pooled entries + slack >= 1
            rows.append(np.full(support.size + 1, row_at))
            cols.append(np.concatenate([support, [n_cols + t]]))
            vals.append(np.full(support.size + 1, -1.0))
            b_ub.append(-1.0)
            row_at += 1
        else:
            # each pooled entry <= slack of this test
            for j in support:
                rows.append(np.array([row_at, row_at]))
                cols.append(np.array([j, n_cols + t]))
                vals.append(np.array([1.0, -1.0]))
                b_ub.append(0.0)
                row_at += 1

    c = np.concatenate([np.ones(n_cols), np.full(n_tests, cfg.slack_weight + _SLACK_TIE_BREAK)])
    bounds = [(0.0, 1.0)] * (n_cols + n_tests)
    if row_at == 0:
        x = np.zeros(n_cols + n_tests)
        return LpSolution(x[:n_cols], x[n_cols:], 0.0)
    a_ub = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(row_at, n_cols + n_tests),
    )
    x, _ = solve_lp(c, a_ub, np.asarray(b_ub), bounds)
    x = np.clip(x, 0.0, 1.0)
    f_frac, slack = x[:n_cols], x[n_cols:]
    objective = float(f_frac.sum() + cfg.slack_weight * slack.sum())
    return LpSolution(f_frac, slack, objective)


def decode(phi: SamplingMatrix, g: OutcomeVector, cfg: DecoderConfig = DecoderConfig()) -> FaultVector:
    """Decode the fault vector from test outcomes via LP relaxation.

    The fractional optimum is rounded at ``cfg.round_threshold``. Noise-free
    outcomes of a d-disjunct design with at most d faults decode exactly.
    """
    sol = _decode_lp(phi, g, cfg)
    bits = (sol.f_frac > cfg.round_threshold).astype(np.uint8)
    return FaultVector(bits, phi.window, phi.n_sensors)


def decode_fractional(
    phi: SamplingMatrix, g: OutcomeVector, cfg: DecoderConfig = DecoderConfig()
) -> LpSolution:
    """Expose the unrounded LP optimum (diagnostics and tests)."""
    return _decode_lp(phi, g, cfg)


def brute_force_decode(
    phi: SamplingMatrix,
    g: OutcomeVector,
    d_max: int,
    budget: int = DEFAULT_BRUTE_BUDGET,
) -> FaultVector:
    """Exact minimum-mismatch decoder over all fault vectors with <= d_max ones.

    Among candidates minimizing the number of outcome mismatches, the one
    with the fewest ones wins; remaining ties go to the lexicographically
    smallest index set. Refuses when sum_w C(cols, w) exceeds ``budget``.
    """
    n_cols = phi.bits.shape[1]
    if len(g) != phi.tests:
        raise ValueError(f"outcome length {len(g)} != number of tests {phi.tests}")
    if d_max < 0:
        raise ValueError(f"d_max must be >= 0, got {d_max}")
    d_max = min(d_max, n_cols)
    total = sum(math.comb(n_cols, w) for w in range(d_max + 1))
    if total > budget:
        raise BudgetExceededError(
            f"brute-force decode would enumerate {total} candidates, budget is {budget}"
        )

    col_masks = [int.from_bytes(np.packbits(col).tobytes(), "big") for col in phi.bits.T]
    g_mask = int.from_bytes(np.packbits(g.bits).tobytes(), "big")

    best_idx: tuple[int, ...] = ()
    best_mismatch = g_mask.bit_count()  # empty fault vector
    # Weight-ascending, lexicographic enumeration: the first strict improvement
    # is automatically the minimum-weight, lexicographically-smallest winner.
    for weight in range(1, d_max + 1):
        for chosen in combinations(range(n_cols), weight):
            encoded = 0
            for j in chosen:
                encoded |= col_masks[j]
            mism = (encoded ^ g_mask).bit_count()
            if mism < best_mismatch:
                best_mismatch = mism
                best_idx = chosen
    bits = np.zeros(n_cols, dtype=np.uint8)
    bits[list(best_idx)] = 1
    return FaultVector(bits, phi.window, phi.n_sensors)
