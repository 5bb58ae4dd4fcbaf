"""Linear-Gaussian system/sensor models and Kalman filter primitives.

All types are immutable value objects and every operation is a pure
function, so filters can be evaluated from any number of concurrent
Monte-Carlo workers without shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigurationError, EmptyGroupError, NumericError

_SYM_TOL = 1e-9


def _own(a, shape=None) -> np.ndarray:
    """Copy input into a read-only float array, optionally checking shape."""
    arr = np.array(a, dtype=float, copy=True)
    if shape is not None and arr.shape != shape:
        raise ConfigurationError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_symmetric(m: np.ndarray, name: str, tol: float = _SYM_TOL) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"{name} must be square, got shape {m.shape}")
    if m.size and np.max(np.abs(m - m.T)) > tol:
        raise ConfigurationError(f"{name} is not symmetric within {tol}")


def _check_psd(m: np.ndarray, name: str, tol: float = _SYM_TOL) -> None:
    _check_symmetric(m, name)
    if m.size and np.min(np.linalg.eigvalsh(m)) < -tol:
        raise ConfigurationError(f"{name} is not positive semidefinite within {tol}")


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Discrete-time linear dynamics x' = F x + Gamma v with v ~ N(0, Q)."""

    F: np.ndarray
    Gamma: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "F", _own(self.F))
        if self.F.ndim != 2 or self.F.shape[0] != self.F.shape[1]:
            raise ConfigurationError(f"F must be square, got shape {self.F.shape}")
        n_x = self.F.shape[0]
        gamma = np.array(self.Gamma, dtype=float, copy=True)
        if gamma.ndim == 1:
            gamma = gamma[:, None]
        object.__setattr__(self, "Gamma", _own(gamma, (n_x, gamma.shape[1])))
        q = np.atleast_2d(np.array(self.Q, dtype=float))
        object.__setattr__(self, "Q", _own(q, (gamma.shape[1], gamma.shape[1])))
        _check_psd(self.Q, "Q")

    @property
    def n_x(self) -> int:
        return self.F.shape[0]


@dataclass(frozen=True, eq=False)
class SensorModel:
    """Measurement model z = H x + w with w ~ N(0, Rw), Rw positive definite."""

    H: np.ndarray
    Rw: np.ndarray

    def __post_init__(self):
        h = np.atleast_2d(np.array(self.H, dtype=float))
        object.__setattr__(self, "H", _own(h))
        rw = np.atleast_2d(np.array(self.Rw, dtype=float))
        object.__setattr__(self, "Rw", _own(rw, (h.shape[0], h.shape[0])))
        _check_symmetric(self.Rw, "Rw")
        try:
            np.linalg.cholesky(self.Rw)
        except np.linalg.LinAlgError:
            raise ConfigurationError("Rw must be positive definite") from None

    @property
    def n_z(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True, eq=False)
class GaussianState:
    """State estimate: mean vector and covariance matrix."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float, copy=True).reshape(-1)
        object.__setattr__(self, "mean", _own(mean))
        n = mean.shape[0]
        object.__setattr__(self, "cov", _own(np.atleast_2d(np.array(self.cov, dtype=float)), (n, n)))
        _check_psd(self.cov, "cov")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class StackedObservation:
    """Measurements of a sensor group stacked into one joint observation.

    Rows are ordered by ascending sensor index; R is block diagonal with one
    block per selected sensor.
    """

    z: np.ndarray
    H: np.ndarray
    R: np.ndarray
    group_size: int
    indices: tuple[int, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.z.shape[0]


def predict(model: SystemModel, state: GaussianState) -> GaussianState:
    """Kalman time update: propagate mean and covariance one step."""
    if model.n_x != state.dim:
        raise ConfigurationError(
            f"state dimension {state.dim} does not match model dimension {model.n_x}"
        )
    mean = model.F @ state.mean
    cov = model.F @ state.cov @ model.F.T + model.Gamma @ model.Q @ model.Gamma.T
    return GaussianState(mean, _symmetrize(cov))


def stack_group(
    sensors: Sequence[SensorModel],
    measurements: Sequence[np.ndarray],
    group: Sequence[int],
) -> StackedObservation:
    """Stack the measurements of the selected sensors into one observation.

    Raises EmptyGroupError for an empty group; the caller is expected to skip
    the test at that time step rather than run the filter.
    """
    idx = sorted(int(i) for i in group)
    if not idx:
        raise EmptyGroupError("testing group is empty")
    if idx[0] < 0 or idx[-1] >= len(sensors):
        raise ValueError(f"sensor index out of range: {idx}")
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate sensor index in group: {idx}")

    rows = [sensors[i].n_z for i in idx]
    total = sum(rows)
    n_x = sensors[idx[0]].H.shape[1]
    z = np.empty(total)
    H = np.empty((total, n_x))
    R = np.zeros((total, total))
    at = 0
    for i, nz in zip(idx, rows):
        zi = np.asarray(measurements[i], dtype=float).reshape(-1)
        if zi.shape[0] != nz:
            raise ValueError(f"measurement of sensor {i} has length {zi.shape[0]}, expected {nz}")
        z[at : at + nz] = zi
        H[at : at + nz] = sensors[i].H
        R[at : at + nz, at : at + nz] = sensors[i].Rw
        at += nz
    return StackedObservation(z=z, H=H, R=R, group_size=len(idx), indices=tuple(idx))


def innovate(pred: GaussianState, obs: StackedObservation) -> tuple[np.ndarray, np.ndarray]:
    """Innovation nu = z - H x and its covariance S = H P H' + R."""
    nu = obs.z - obs.H @ pred.mean
    S = _symmetrize(obs.H @ pred.cov @ obs.H.T + obs.R)
    return nu, S


def nis(nu: np.ndarray, S: np.ndarray) -> float:
    """Normalized innovation squared nu' S^-1 nu, solved via Cholesky."""
    try:
        factor = cho_factor(S, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"innovation covariance is not positive definite: {exc}") from None
    return float(nu @ cho_solve(factor, nu, check_finite=False))


def update(
    pred: GaussianState,
    obs: StackedObservation,
    nu: np.ndarray,
    S: np.ndarray,
) -> GaussianState:
    """Kalman measurement update in Joseph form.

    Joseph form plus explicit symmetrization keeps the covariance PSD over
    long Monte-Carlo horizons; a non-PD S is treated as a bug rather than
    masked with regularization.
    """
    try:
        factor = cho_factor(S, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"innovation covariance is not positive definite: {exc}") from None
    P = pred.cov
    # W = P H' S^-1, via S W' = H P
    W = cho_solve(factor, obs.H @ P, check_finite=False).T
    mean = pred.mean + W @ nu
    ImWH = np.eye(pred.dim) - W @ obs.H
    cov = _symmetrize(ImWH @ P @ ImWH.T + W @ obs.R @ W.T)
    return GaussianState(mean, cov)
