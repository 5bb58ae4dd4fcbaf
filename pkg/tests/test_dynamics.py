import numpy as np
import pytest

from gtkalman import (
    ConfigurationError,
    EmptyGroupError,
    GaussianState,
    NumericError,
    SensorModel,
    SystemModel,
    innovate,
    nis,
    predict,
    stack_group,
    update,
)
from conftest import cv_model, position_sensor


def _state(mean, cov):
    return GaussianState(np.asarray(mean, dtype=float), np.asarray(cov, dtype=float))


class TestPredict:
    def test_identity_dynamics_is_noop(self):
        model = SystemModel(F=np.eye(2), Gamma=np.zeros((2, 1)), Q=[[0.0]])
        s = _state([3.0, -1.0], np.diag([2.0, 5.0]))
        out = predict(model, s)
        np.testing.assert_array_equal(out.mean, s.mean)
        np.testing.assert_array_equal(out.cov, s.cov)

    def test_constant_velocity_mean(self):
        out = predict(cv_model(), _state([0.0, 1.5], np.diag([1000.0, 1.0])))
        np.testing.assert_allclose(out.mean, [0.15, 1.5], atol=1e-15)

    def test_covariance_matches_explicit_arithmetic(self):
        # oracle: explicit 2x2 products for F P F' + G Q G'
        F = [[1.0, 0.1], [0.0, 1.0]]
        P = [[1000.0, 0.0], [0.0, 1.0]]
        G = [0.005, 0.1]
        q = 0.01
        expected = [[0.0, 0.0], [0.0, 0.0]]
        for i in range(2):
            for j in range(2):
                acc = 0.0
                for a in range(2):
                    for b in range(2):
                        acc += F[i][a] * P[a][b] * F[j][b]
                expected[i][j] = acc + G[i] * q * G[j]
        out = predict(cv_model(), _state([0.0, 1.5], P))
        np.testing.assert_allclose(out.cov, expected, rtol=0, atol=1e-12)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ConfigurationError):
            predict(cv_model(), _state([1.0, 2.0, 3.0], np.eye(3)))

    def test_covariance_stays_symmetric_over_long_horizon(self):
        model = cv_model()
        s = _state([0.0, 1.5], np.diag([1000.0, 1.0]))
        sensor = position_sensor()
        rng = np.random.default_rng(3)
        for _ in range(300):
            s = predict(model, s)
            obs = stack_group([sensor], [rng.normal(size=1)], [0])
            nu, S = innovate(s, obs)
            s = update(s, obs, nu, S)
            assert np.max(np.abs(s.cov - s.cov.T)) < 1e-10


class TestStackGroup:
    def test_singleton(self):
        obs = stack_group([position_sensor()] * 4, [np.array([float(i)]) for i in range(4)], [3])
        assert obs.group_size == 1
        np.testing.assert_array_equal(obs.z, [3.0])
        np.testing.assert_array_equal(obs.H, [[1.0, 0.0]])
        np.testing.assert_array_equal(obs.R, [[1.0]])

    def test_two_homogeneous_sensors(self):
        obs = stack_group(
            [position_sensor(), position_sensor()], [np.array([0.5]), np.array([1.5])], [1, 0]
        )
        assert obs.indices == (0, 1)
        np.testing.assert_array_equal(obs.H, [[1.0, 0.0], [1.0, 0.0]])
        np.testing.assert_array_equal(obs.R, np.eye(2))

    def test_empty_group_raises(self):
        with pytest.raises(EmptyGroupError):
            stack_group([position_sensor()], [np.array([0.0])], [])

    def test_rows_ordered_by_sensor_index(self):
        obs = stack_group(
            [position_sensor()] * 3, [np.array([10.0]), np.array([20.0]), np.array([30.0])], [2, 0]
        )
        np.testing.assert_array_equal(obs.z, [10.0, 30.0])

    def test_bad_index_raises(self):
        with pytest.raises(ValueError):
            stack_group([position_sensor()], [np.array([0.0])], [1])


class TestInnovate:
    def test_perfect_prediction_gives_zero_innovation(self):
        s = _state([2.0, 0.0], np.diag([1.0, 1.0]))
        obs = stack_group([position_sensor()], [np.array([2.0])], [0])
        nu, _ = innovate(s, obs)
        np.testing.assert_array_equal(nu, [0.0])

    def test_scalar_case_matches_hand_product(self):
        # S = H P H' + R = P[0,0] + 1 = 1001 for P = diag(1000, 1)
        s = _state([0.0, 1.5], np.diag([1000.0, 1.0]))
        obs = stack_group([position_sensor()], [np.array([5.0])], [0])
        nu, S = innovate(s, obs)
        assert S[0, 0] == pytest.approx(1001.0)
        assert nu[0] == pytest.approx(5.0)

    def test_two_identical_sensors_share_cross_covariance(self):
        s = _state([0.0, 1.5], np.diag([1000.0, 1.0]))
        obs = stack_group(
            [position_sensor(), position_sensor()], [np.array([1.0]), np.array([1.0])], [0, 1]
        )
        _, S = innovate(s, obs)
        assert S[0, 0] == pytest.approx(1001.0)
        assert S[1, 1] == pytest.approx(1001.0)
        assert S[0, 1] == pytest.approx(1000.0)
        assert S[1, 0] == pytest.approx(1000.0)


class TestUpdate:
    def test_zero_innovation_keeps_mean_shrinks_cov(self):
        s = _state([2.0, 0.0], np.diag([1000.0, 1.0]))
        obs = stack_group([position_sensor()], [np.array([2.0])], [0])
        nu, S = innovate(s, obs)
        out = update(s, obs, nu, S)
        np.testing.assert_array_equal(out.mean, s.mean)
        assert np.trace(out.cov) < np.trace(s.cov)

    def test_scalar_closed_form(self):
        # posterior variance P - P^2/(P+R) = 1000 - 1000^2/1001
        s = _state([0.0, 1.5], np.diag([1000.0, 1.0]))
        obs = stack_group([position_sensor()], [np.array([3.0])], [0])
        nu, S = innovate(s, obs)
        out = update(s, obs, nu, S)
        assert out.cov[0, 0] == pytest.approx(1000.0 - 1000.0**2 / 1001.0, rel=1e-12)

    def test_uninformative_measurement_limit(self):
        s = _state([0.0, 1.5], np.diag([1000.0, 1.0]))
        huge = position_sensor(rw=1e12)
        obs = stack_group([huge], [np.array([123.0])], [0])
        nu, S = innovate(s, obs)
        out = update(s, obs, nu, S)
        np.testing.assert_allclose(out.mean, s.mean, atol=1e-6)

    def test_non_pd_covariance_raises_numeric_error(self):
        s = _state([0.0], [[1.0]])
        obs = stack_group([SensorModel(H=[[1.0]], Rw=[[1.0]])], [np.array([0.0])], [0])
        bad_S = np.array([[-1.0]])
        with pytest.raises(NumericError):
            update(s, obs, np.array([0.0]), bad_S)
        with pytest.raises(NumericError):
            nis(np.array([1.0]), bad_S)


class TestModelValidation:
    def test_q_must_be_psd(self):
        with pytest.raises(ConfigurationError):
            SystemModel(F=np.eye(2), Gamma=np.zeros((2, 1)), Q=[[-1.0]])

    def test_rw_must_be_pd(self):
        with pytest.raises(ConfigurationError):
            SensorModel(H=[[1.0, 0.0]], Rw=[[0.0]])

    def test_state_cov_psd_tolerance(self):
        GaussianState([0.0], [[0.0]])  # PSD boundary is fine
        with pytest.raises(ConfigurationError):
            GaussianState([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])


class TestWhiteness:
    def test_normalized_innovation_mean_matches_dof(self):
        # fault-free run: nu' S^-1 nu averaged over >= 1e4 samples ~ dof
        model = cv_model()
        sensors = [position_sensor(), position_sensor()]
        rng = np.random.default_rng(2024)
        stats = []
        for _ in range(500):
            x = np.array([rng.normal(0.0, np.sqrt(1000.0)), rng.normal(1.5, 1.0)])
            s = _state([0.0, 1.5], np.diag([1000.0, 1.0]))
            for _ in range(20):
                v = rng.normal(0.0, 0.1)
                x = model.F @ x + model.Gamma[:, 0] * v
                s = predict(model, s)
                z = [np.array([x[0] + rng.normal()]) for _ in sensors]
                obs = stack_group(sensors, z, [0, 1])
                nu, S = innovate(s, obs)
                stats.append(nis(nu, S))
                s = update(s, obs, nu, S)
        stats = np.asarray(stats)
        dof = 2.0
        se = np.sqrt(2.0 * dof / stats.size)
        assert stats.size >= 10_000
        assert abs(stats.mean() - dof) < 3.0 * se

    def test_update_shrinks_innovation_on_same_measurement(self):
        rng = np.random.default_rng(7)
        sensors = [position_sensor()]
        before, after = [], []
        for _ in range(1000):
            s = _state([0.0, 1.5], np.diag([100.0, 1.0]))
            z = [np.array([rng.normal(0.0, 10.0)])]
            obs = stack_group(sensors, z, [0])
            nu, S = innovate(s, obs)
            before.append(abs(nu[0]))
            post = update(s, obs, nu, S)
            nu2, _ = innovate(post, obs)
            after.append(abs(nu2[0]))
        assert np.mean(after) < np.mean(before)
