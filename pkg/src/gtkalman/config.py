"""Experiment configuration: INI-style files and the built-in reference scenario.

The reference scenario is a 1-D constant-velocity tracking problem: 150
position sensors, window of 5 steps, 50 pooled tests, Bernoulli attacks
with probability 0.01 per (sensor, time) cell. See README for the schema.
"""

from __future__ import annotations

import configparser
import math
from pathlib import Path

import numpy as np

from .decoder import DecoderConfig
from .detector import DetectorConfig
from .dynamics import SensorModel, SystemModel
from .errors import ConfigurationError
from .harness import ALL_METHODS, ExperimentConfig
from .simulate import AttackModel, ScenarioConfig

DEFAULT_RB_SWEEP = (100.0, 1000.0, 5000.0, 10000.0, 50000.0)


def constant_velocity_model(ts: float, process_noise_var: float) -> SystemModel:
    """1-D constant-velocity dynamics sampled every ``ts`` seconds."""
    F = np.array([[1.0, ts], [0.0, 1.0]])
    gamma = np.array([[0.5 * ts * ts], [ts]])
    return SystemModel(F, gamma, np.array([[process_noise_var]]))


def position_sensors(count: int, noise_var: float) -> tuple[SensorModel, ...]:
    """Identical scalar position sensors H = [1 0], Rw = noise_var."""
    sensor = SensorModel(np.array([[1.0, 0.0]]), np.array([[noise_var]]))
    return tuple([sensor] * count)


def auto_p(q: float, window: int, n_sensors: int) -> float:
    """Default sampling probability 1 / (q * K * N)."""
    return 1.0 / (q * window * n_sensors)


def reference_config(
    rb: float = 10000.0,
    n_runs: int = 100,
    master_seed: int = 20240901,
    methods: tuple[str, ...] = ALL_METHODS,
    horizon: int = 50,
    window_prior: str = "reset",
) -> ExperimentConfig:
    """Desk-scale reference experiment (N=150, K=5, T=50, q=0.01)."""
    window, n_sensors, q = 5, 150, 0.01
    scenario = ScenarioConfig(
        model=constant_velocity_model(0.1, 0.01),
        sensors=position_sensors(n_sensors, 1.0),
        x0_mean=np.array([0.0, 1.5]),
        x0_cov=np.diag([1000.0, 1.0]),
        horizon=horizon,
        window=window,
        attack=AttackModel(q=q, Rb=np.array([[rb]])),
    )
    return ExperimentConfig(
        scenario=scenario,
        tests=50,
        p=auto_p(q, window, n_sensors),
        decoder=DecoderConfig(),
        detector=DetectorConfig(tail_mass=0.0005, window=window),
        n_runs=n_runs,
        methods=methods,
        master_seed=master_seed,
        window_prior=window_prior,
    )


def _get(parser, section: str, key: str, conv, default):
    if not parser.has_option(section, key):
        if default is None:
            raise ConfigurationError(f"missing required key [{section}] {key}")
        return default
    raw = parser.get(section, key)
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad value for [{section}] {key}: {raw!r} ({exc})") from None


def _floats(raw: str) -> list[float]:
    return [float(v) for v in raw.replace(",", " ").split()]


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def load_experiment_config(path) -> tuple[ExperimentConfig, tuple[float, ...]]:
    """Parse an experiment config file.

    Returns the experiment plus the Rb sweep grid used by the ``sweep``
    subcommand. All keys are optional and default to the reference scenario.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None
    for section in parser.sections():
        if section not in ("system", "sensors", "attack", "grouptest", "detector", "decoder", "experiment"):
            raise ConfigurationError(f"unknown config section [{section}]")

    ts = _get(parser, "system", "ts", float, 0.1)
    qvar = _get(parser, "system", "process_noise_var", float, 0.01)
    x0_mean = _get(parser, "system", "x0_mean", _floats, [0.0, 1.5])
    x0_cov = _get(parser, "system", "x0_cov_diag", _floats, [1000.0, 1.0])
    if len(x0_mean) != 2 or len(x0_cov) != 2:
        raise ConfigurationError("x0_mean and x0_cov_diag must each hold two values")

    n_sensors = _get(parser, "sensors", "count", int, 150)
    rw = _get(parser, "sensors", "measurement_noise_var", float, 1.0)
    if n_sensors < 1 or rw <= 0:
        raise ConfigurationError("sensors.count must be >= 1 and measurement_noise_var > 0")

    q = _get(parser, "attack", "q", float, 0.01)
    rb = _get(parser, "attack", "rb", float, 10000.0)
    bias_mode = _get(parser, "attack", "bias_mode", str, "gaussian")
    bias_offset = _get(parser, "attack", "bias_offset", float, 0.0)
    rb_sweep = tuple(_get(parser, "attack", "rb_sweep", _floats, list(DEFAULT_RB_SWEEP)))

    tests = _get(parser, "grouptest", "tests", int, 50)
    window = _get(parser, "grouptest", "window", int, 5)
    p_raw = _get(parser, "grouptest", "p", str, "auto")
    redraw = _get(parser, "grouptest", "redraw_per_window", _bool, True)

    tail_mass = _get(parser, "detector", "tail_mass", float, 0.0005)
    slack_weight = _get(parser, "decoder", "slack_weight", float, 1.0)
    round_threshold = _get(parser, "decoder", "round_threshold", float, 0.5)

    horizon = _get(parser, "experiment", "horizon", int, 50)
    n_runs = _get(parser, "experiment", "runs", int, 100)
    seed = _get(parser, "experiment", "seed", int, 20240901)
    methods = tuple(_get(parser, "experiment", "methods", str, " ".join(ALL_METHODS)).split())
    window_prior = _get(parser, "experiment", "window_prior", str, "reset")

    if p_raw.strip().lower() == "auto":
        p = auto_p(q, window, n_sensors)
    else:
        try:
            p = float(p_raw)
        except ValueError:
            raise ConfigurationError(f"grouptest.p must be 'auto' or a float, got {p_raw!r}") from None
    if not (0.0 <= p <= 1.0 and math.isfinite(p)):
        raise ConfigurationError(f"sampling probability p={p} out of [0, 1]")

    try:
        scenario = ScenarioConfig(
            model=constant_velocity_model(ts, qvar),
            sensors=position_sensors(n_sensors, rw),
            x0_mean=np.asarray(x0_mean),
            x0_cov=np.diag(x0_cov),
            horizon=horizon,
            window=window,
            attack=AttackModel(q=q, Rb=np.array([[rb]]), bias_mode=bias_mode, bias_offset=bias_offset),
        )
        experiment = ExperimentConfig(
            scenario=scenario,
            tests=tests,
            p=p,
            decoder=DecoderConfig(slack_weight=slack_weight, round_threshold=round_threshold),
            detector=DetectorConfig(tail_mass=tail_mass, window=window),
            n_runs=n_runs,
            methods=methods,
            master_seed=seed,
            redraw_phi=redraw,
            window_prior=window_prior,
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    return experiment, rb_sweep
