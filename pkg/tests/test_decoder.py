import numpy as np
import pytest

from gtkalman import (
    BudgetExceededError,
    DecoderConfig,
    FaultVector,
    OutcomeVector,
    SamplingMatrix,
    apply_noise,
    boolean_encode,
    brute_force_decode,
    decode,
    decode_fractional,
    generate_matrix,
    is_d_disjunct,
    load_matrix,
    solve_lp,
)


def fault(bits, window, n_sensors):
    return FaultVector(np.asarray(bits, dtype=np.uint8), window, n_sensors)


def certified_battery(d=2, count=6):
    """Small random designs certified d-disjunct (12 columns, 42 tests)."""
    mats, seed = [], 10_000
    while len(mats) < count:
        phi = generate_matrix(42, 3, 4, 1.0 / 3.0, seed)
        if is_d_disjunct(phi, d):
            mats.append(phi)
        seed += 1
    return mats


class TestSolveLp:
    def test_minimize_x_above_three(self):
        x, obj = solve_lp([1.0], [[-1.0]], [-3.0], [(0.0, None)])
        assert x[0] == pytest.approx(3.0)
        assert obj == pytest.approx(3.0)

    def test_toy_lp_objective_matches_vertex_enumeration(self, toy_matrix_path):
        # oracle: enumerate {0,1} fault assignments; slack follows greedily
        phi = load_matrix(toy_matrix_path)
        g = OutcomeVector(np.array([1, 1, 1, 0], dtype=np.uint8))
        best = np.inf
        for mask in range(2**8):
            f = np.array([(mask >> j) & 1 for j in range(8)], dtype=float)
            cost = f.sum()
            for t in range(4):
                row = phi.bits[t].astype(bool)
                if g.bits[t]:
                    cost += max(0.0, 1.0 - f[row].sum())
                elif row.any():
                    cost += f[row].max()
            best = min(best, cost)
        sol = decode_fractional(phi, g)
        assert best == pytest.approx(2.0)
        assert sol.objective == pytest.approx(best, abs=1e-6)
        assert sol.slack.sum() == pytest.approx(0.0, abs=1e-6)

    def test_zero_slack_weight_allows_free_slack(self):
        phi = generate_matrix(5, 2, 4, 0.5, 3)
        g = OutcomeVector(np.ones(5, dtype=np.uint8))
        sol = decode_fractional(phi, g, DecoderConfig(slack_weight=0.0))
        assert sol.objective == pytest.approx(0.0, abs=1e-6)
        assert not decode(phi, g, DecoderConfig(slack_weight=0.0)).bits.any()

    def test_objective_nondecreasing_in_slack_weight(self):
        phi = generate_matrix(10, 3, 4, 0.3, 17)
        f = fault([1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0], 3, 4)
        g = boolean_encode(phi, f)
        e = np.zeros(10, dtype=np.uint8)
        e[4] = 1
        gn = apply_noise(g, OutcomeVector(e))
        objectives = [
            decode_fractional(phi, gn, DecoderConfig(slack_weight=lam)).objective
            for lam in (0.0, 0.5, 1.0, 2.0, 5.0)
        ]
        assert all(a <= b + 1e-9 for a, b in zip(objectives, objectives[1:]))


class TestDecode:
    def test_all_negative_outcomes_decode_to_zero(self):
        phi = generate_matrix(9, 2, 5, 0.4, 2)
        g = OutcomeVector(np.zeros(9, dtype=np.uint8))
        assert not decode(phi, g).bits.any()

    def test_toy_instance_exact(self, toy_matrix_path):
        phi = load_matrix(toy_matrix_path)
        g = OutcomeVector(np.array([1, 1, 1, 0], dtype=np.uint8))
        f_hat = decode(phi, g)
        assert f_hat.index_pairs() == [(1, 0), (2, 1)]

    def test_matches_brute_force_on_random_noise_free_instance(self):
        phi = generate_matrix(12, 4, 5, 0.2, 31)
        rng = np.random.default_rng(8)
        bits = np.zeros(20, dtype=np.uint8)
        bits[rng.choice(20, size=2, replace=False)] = 1
        f = fault(bits, 4, 5)
        g = boolean_encode(phi, f)
        lp = decode(phi, g)
        bf = brute_force_decode(phi, g, 2)
        np.testing.assert_array_equal(lp.bits, bf.bits)

    def test_respects_negative_tests_noise_free(self):
        for seed in range(5):
            phi = generate_matrix(14, 3, 4, 0.3, 200 + seed)
            rng = np.random.default_rng(seed)
            bits = np.zeros(12, dtype=np.uint8)
            bits[rng.choice(12, size=2, replace=False)] = 1
            g = boolean_encode(phi, fault(bits, 3, 4))
            decoded = decode(phi, g).bits.astype(bool)
            for t in range(phi.tests):
                if not g.bits[t]:
                    assert not decoded[phi.bits[t].astype(bool)].any()

    def test_fractional_solution_is_feasible(self):
        phi = generate_matrix(20, 4, 5, 0.25, 77)
        rng = np.random.default_rng(3)
        bits = np.zeros(20, dtype=np.uint8)
        bits[rng.choice(20, size=3, replace=False)] = 1
        g = boolean_encode(phi, fault(bits, 4, 5))
        e = np.zeros(20, dtype=np.uint8)
        e[5] = 1
        gn = apply_noise(g, OutcomeVector(e))
        sol = decode_fractional(phi, gn)
        tol = 1e-7
        assert np.all(sol.f_frac >= -tol) and np.all(sol.f_frac <= 1 + tol)
        assert np.all(sol.slack >= -tol)
        for t in range(phi.tests):
            row = phi.bits[t].astype(bool)
            if gn.bits[t]:
                assert sol.f_frac[row].sum() + sol.slack[t] >= 1 - tol
            elif row.any():
                assert sol.f_frac[row].max() <= sol.slack[t] + tol

    def test_noisy_agreement_with_oracle_on_certified_designs(self):
        # LP relaxation is not exact under noise; demand >= 95% agreement
        rng = np.random.default_rng(5)
        mats = certified_battery(d=2, count=6)
        agree = total = 0
        for phi in mats:
            for _ in range(25):
                bits = np.zeros(12, dtype=np.uint8)
                bits[rng.choice(12, size=2, replace=False)] = 1
                g = boolean_encode(phi, fault(bits, 3, 4))
                e = np.zeros(phi.tests, dtype=np.uint8)
                e[rng.integers(phi.tests)] = 1
                gn = apply_noise(g, OutcomeVector(e))
                bf = brute_force_decode(phi, gn, 2)
                lp = decode(phi, gn)
                total += 1
                agree += int(np.array_equal(lp.bits, bf.bits))
        assert agree / total >= 0.95


class TestBruteForce:
    def test_all_negative(self):
        phi = generate_matrix(6, 2, 4, 0.4, 4)
        g = OutcomeVector(np.zeros(6, dtype=np.uint8))
        assert not brute_force_decode(phi, g, 2).bits.any()

    def test_identity_matrix_copies_outcomes(self):
        phi = SamplingMatrix(np.eye(8, dtype=np.uint8), 8, 2, 4, 0.5)
        g = OutcomeVector(np.array([1, 0, 0, 1, 0, 1, 0, 0], dtype=np.uint8))
        np.testing.assert_array_equal(brute_force_decode(phi, g, 8).bits, g.bits)

    def test_toy_instance_matches_lp(self, toy_matrix_path):
        phi = load_matrix(toy_matrix_path)
        g = OutcomeVector(np.array([1, 1, 1, 0], dtype=np.uint8))
        bf = brute_force_decode(phi, g, 2)
        np.testing.assert_array_equal(bf.bits, decode(phi, g).bits)

    def test_tie_break_prefers_smaller_support_then_lex(self):
        # two identical columns: lexicographically first index wins
        bits = np.array([[1, 1], [1, 1]], dtype=np.uint8)
        phi = SamplingMatrix(bits, 2, 1, 2, 0.5)
        g = OutcomeVector(np.array([1, 1], dtype=np.uint8))
        np.testing.assert_array_equal(brute_force_decode(phi, g, 2).bits, [1, 0])

    def test_budget_refusal(self):
        phi = generate_matrix(5, 10, 30, 0.2, 1)
        with pytest.raises(BudgetExceededError):
            brute_force_decode(phi, OutcomeVector(np.zeros(5, dtype=np.uint8)), 5, budget=100)


class TestConfigValidation:
    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            DecoderConfig(round_threshold=1.5)

    def test_bad_weight(self):
        with pytest.raises(ValueError):
            DecoderConfig(slack_weight=-1.0)
