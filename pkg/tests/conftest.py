from pathlib import Path

import numpy as np
import pytest

from gtkalman import AttackModel, ScenarioConfig, SensorModel, SystemModel

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def toy_matrix_path() -> Path:
    return REPO_ROOT / "data" / "toy_matrix.txt"


@pytest.fixture(scope="session")
def toy_outcome_path() -> Path:
    return REPO_ROOT / "data" / "toy_outcome.txt"


def cv_model(ts: float = 0.1, q: float = 0.01) -> SystemModel:
    return SystemModel(
        F=np.array([[1.0, ts], [0.0, 1.0]]),
        Gamma=np.array([[0.5 * ts * ts], [ts]]),
        Q=np.array([[q]]),
    )


def position_sensor(rw: float = 1.0) -> SensorModel:
    return SensorModel(H=np.array([[1.0, 0.0]]), Rw=np.array([[rw]]))


def small_scenario(
    n_sensors: int = 10,
    horizon: int = 10,
    window: int = 5,
    q: float = 0.01,
    rb: float = 10000.0,
) -> ScenarioConfig:
    return ScenarioConfig(
        model=cv_model(),
        sensors=tuple(position_sensor() for _ in range(n_sensors)),
        x0_mean=np.array([0.0, 1.5]),
        x0_cov=np.diag([1000.0, 1.0]),
        horizon=horizon,
        window=window,
        attack=AttackModel(q=q, Rb=np.array([[rb]])),
    )
