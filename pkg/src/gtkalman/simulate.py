"""Ground-truth simulation, fault patterns, and measurement synthesis.

Randomness is organized as independent substreams (process noise,
measurement noise, attack pattern, bias realizations) so that, for a fixed
seed, changing the bias covariance rescales the injected biases without
perturbing any other draw.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import GaussianState, SensorModel, SystemModel
from .errors import ConfigurationError
from .grouptest import FaultVector


def _cov_sqrt(cov) -> np.ndarray:
    """Symmetric PSD square root; tolerates singular covariances."""
    m = np.atleast_2d(np.asarray(cov, dtype=float))
    if not m.size or not m.any():
        return np.zeros_like(m)
    vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
    vals = np.clip(vals, 0.0, None)
    return vecs @ np.diag(np.sqrt(vals)) @ vecs.T


@dataclass(frozen=True, eq=False)
class AttackModel:
    """Bernoulli(q) selection of (sensor, time) targets with injected bias.

    In the default mode the bias is drawn fresh per attacked entry from
    N(0, Rb); ``constant`` mode injects ``bias_offset`` deterministically.
    """

    q: float
    Rb: np.ndarray
    bias_mode: str = "gaussian"
    bias_offset: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ConfigurationError(f"attack probability q must lie in [0, 1], got {self.q}")
        rb = np.atleast_2d(np.asarray(self.Rb, dtype=float))
        if rb.shape[0] != rb.shape[1] or np.max(np.abs(rb - rb.T), initial=0.0) > 1e-9:
            raise ConfigurationError("Rb must be a symmetric square matrix")
        if rb.size and np.min(np.linalg.eigvalsh(rb)) < -1e-9:
            raise ConfigurationError("Rb must be positive semidefinite")
        rb.setflags(write=False)
        object.__setattr__(self, "Rb", rb)
        if self.bias_mode not in ("gaussian", "constant"):
            raise ConfigurationError(f"unknown bias_mode {self.bias_mode!r}")


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Everything needed to simulate one tracking scenario."""

    model: SystemModel
    sensors: tuple[SensorModel, ...]
    x0_mean: np.ndarray
    x0_cov: np.ndarray
    horizon: int
    window: int
    attack: AttackModel

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        mean = np.array(self.x0_mean, dtype=float, copy=True).reshape(-1)
        cov = np.atleast_2d(np.array(self.x0_cov, dtype=float))
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "x0_mean", mean)
        object.__setattr__(self, "x0_cov", cov)
        if mean.shape[0] != self.model.n_x or cov.shape != (self.model.n_x, self.model.n_x):
            raise ConfigurationError("initial state dimensions do not match the system model")
        if self.window < 1:
            raise ConfigurationError(f"window must be >= 1, got {self.window}")
        if self.horizon < 1 or self.horizon % self.window != 0:
            raise ConfigurationError(
                f"horizon must be a positive multiple of window, got {self.horizon} / {self.window}"
            )
        if not self.sensors:
            raise ConfigurationError("at least one sensor is required")

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    @property
    def n_windows(self) -> int:
        return self.horizon // self.window

    def initial_state(self) -> GaussianState:
        return GaussianState(self.x0_mean, self.x0_cov)


def simulate_truth(cfg: ScenarioConfig, seed) -> np.ndarray:
    """Sample a state trajectory of shape (horizon + 1, n_x).

    x_0 ~ N(x0_mean, x0_cov), then x_{k+1} = F x_k + Gamma v_k.
    """
    rng = np.random.default_rng(seed)
    n_x = cfg.model.n_x
    n_v = cfg.model.Q.shape[0]
    states = np.empty((cfg.horizon + 1, n_x))
    states[0] = cfg.x0_mean + _cov_sqrt(cfg.x0_cov) @ rng.standard_normal(n_x)
    q_sqrt = _cov_sqrt(cfg.model.Q)
    noise = rng.standard_normal((cfg.horizon, n_v)) @ q_sqrt.T
    for k in range(cfg.horizon):
        states[k + 1] = cfg.model.F @ states[k] + cfg.model.Gamma @ noise[k]
    return states


def sample_fault_pattern(attack: AttackModel, window: int, n_sensors: int, seed=None) -> FaultVector:
    """Draw the per-(sensor, time) fault indicator, each entry Bernoulli(q)."""
    rng = np.random.default_rng(attack.seed if seed is None else seed)
    bits = (rng.random(window * n_sensors) < attack.q).astype(np.uint8)
    return FaultVector(bits, window, n_sensors)


def synthesize_measurements(
    truth: np.ndarray,
    sensors: Sequence[SensorModel],
    f: FaultVector,
    attack: AttackModel,
    seed=None,
) -> np.ndarray:
    """Generate measurements for one window.

    ``truth`` holds the K in-window states (shape (K, n_x)). Returns an
    array of shape (K, N, n_z) when all sensors share one measurement
    dimension, else a nested list. The same seed reproduces identical
    measurement noise regardless of the fault pattern or bias covariance.
    """
    truth = np.atleast_2d(np.asarray(truth, dtype=float))
    window, n_sensors = f.window, f.n_sensors
    if truth.shape[0] != window:
        raise ValueError(f"truth covers {truth.shape[0]} steps, expected {window}")
    if len(sensors) != n_sensors:
        raise ValueError(f"got {len(sensors)} sensors, fault vector expects {n_sensors}")

    entropy = attack.seed if seed is None else seed
    if not isinstance(entropy, np.random.SeedSequence):
        entropy = np.random.SeedSequence(entropy)
    noise_rng, bias_rng = (np.random.default_rng(s) for s in entropy.spawn(2))

    nz_set = {s.n_z for s in sensors}
    homogeneous = len(nz_set) == 1
    nz = nz_set.pop() if homogeneous else None

    # Measurement noise for every (time, sensor) cell, fault pattern aside.
    if homogeneous:
        raw = noise_rng.standard_normal((window, n_sensors, nz))
        out = np.empty((window, n_sensors, nz))
        for i, sensor in enumerate(sensors):
            w = raw[:, i, :] @ _cov_sqrt(sensor.Rw).T
            out[:, i, :] = truth @ sensor.H.T + w
    else:
        out = [
            [
                sensors[i].H @ truth[k] + _cov_sqrt(sensors[i].Rw) @ noise_rng.standard_normal(sensors[i].n_z)
                for i in range(n_sensors)
            ]
            for k in range(window)
        ]

    rb_sqrt = _cov_sqrt(attack.Rb)
    for sensor_idx, time_idx in f.index_pairs():
        nz_i = sensors[sensor_idx].n_z
        if attack.bias_mode == "gaussian":
            bias = rb_sqrt[:nz_i, :nz_i] @ bias_rng.standard_normal(nz_i)
        else:
            bias = np.full(nz_i, attack.bias_offset)
        if homogeneous:
            out[time_idx, sensor_idx] += bias
        else:
            out[time_idx][sensor_idx] = out[time_idx][sensor_idx] + bias
    return out


def dump_truth_csv(truth: np.ndarray, path) -> None:
    """Debug dump of a state trajectory: step, then one column per component."""
    truth = np.atleast_2d(np.asarray(truth, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + [f"x{i}" for i in range(truth.shape[1])])
        for k, row in enumerate(truth):
            w.writerow([k] + [format(v, ".10g") for v in row])


def dump_measurements_csv(measurements, path) -> None:
    """Debug dump of one window's measurements: step, sensor, then components."""
    n_z = max(np.asarray(measurements[k][i]).reshape(-1).size
              for k in range(len(measurements)) for i in range(len(measurements[k])))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "sensor"] + [f"z{i}" for i in range(n_z)])
        for k in range(len(measurements)):
            for i in range(len(measurements[k])):
                z = np.asarray(measurements[k][i], dtype=float).reshape(-1)
                w.writerow([k, i] + [format(v, ".10g") for v in z])
