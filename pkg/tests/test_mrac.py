"""Tests for matching gains, the gain law and Lyapunov certificates."""

import numpy as np
import pytest
from scipy.linalg import solve_continuous_lyapunov

from safe_admittance.errors import NoCommonP, NotHurwitz, StructureMismatch
from safe_admittance.mrac import (
    AdaptiveGainSet,
    control_uc,
    find_common_P,
    gain_rate,
    gain_update_step,
    lyapunov_margin,
    lyapunov_trace,
    lyapunov_value,
    matching_gains,
    solve_lyapunov,
)
from safe_admittance.reference import compliant_matrix, safety_matrix, subsystem_matrix


class TestMatchingGains:
    def test_gains_match_each_subsystem(self, state_space, models):
        A_a, B_a = state_space
        for A in (models.A1, models.A2):
            K = matching_gains(A_a, B_a, A)
            assert np.allclose(A_a + B_a @ K, A)

    def test_safety_gain_values(self, state_space, models):
        A_a, B_a = state_space
        K2 = matching_gains(A_a, B_a, models.A2)
        assert np.allclose(K2, [[-30, 0, -35, 0], [0, -30, 0, -35]])

    def test_compliant_gain_is_zero_when_models_coincide(self, state_space, models):
        A_a, B_a = state_space
        assert np.allclose(matching_gains(A_a, B_a, models.A1), 0.0)

    def test_rejects_upper_block_difference(self, state_space, models):
        A_a, B_a = state_space
        bad = models.A2.copy()
        bad[0, 2] = 2.0
        with pytest.raises(StructureMismatch):
            matching_gains(A_a, B_a, bad)


class TestGainLaw:
    def test_control_uc(self):
        K = np.array([[1.0, 0.0, 2.0, 0.0]])
        assert np.allclose(control_uc(K, np.array([1.0, 0.0, 1.0, 0.0]), 0.5), [3.5])

    def test_gain_rate_shape_and_sign(self, models):
        Gamma = np.diag([10.0, 8.0])
        P = np.eye(4)
        e_a = np.array([0.0, 0.0, 1.0, 0.0])
        E = np.array([1.0, 0.0, 0.0, 0.0])
        rate = gain_rate(Gamma, models.B_a, P, e_a, E)
        assert rate.shape == (2, 4)
        assert rate[0, 0] == pytest.approx(-10.0)
        assert np.count_nonzero(rate) == 1

    def test_euler_update(self, models):
        K = np.zeros((2, 4))
        Gamma = np.eye(2)
        e_a = np.array([0.0, 0.0, 0.0, 2.0])
        E = np.array([0.0, 1.0, 0.0, 0.0])
        K_new = gain_update_step(K, Gamma, models.B_a, np.eye(4), e_a, E, 0.01)
        assert K_new[1, 1] == pytest.approx(-0.02)


class TestLyapunov:
    @pytest.mark.parametrize("k, d", [(10.0, 15.0), (40.0, 50.0), (5.0, 8.0)])
    def test_two_by_two_solution_matches_scipy(self, k, d):
        A = np.array([[0.0, 1.0], [-k, -d]])
        P = solve_lyapunov(A)
        assert np.allclose(P, solve_continuous_lyapunov(A.T, -np.eye(2)))
        assert np.allclose(A.T @ P + P @ A, -np.eye(2))

    def test_residual_on_random_hurwitz_blocks(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            N = rng.normal(size=(2, 2))
            target = rng.uniform(-2.0, -0.2)
            A = N + (target - np.linalg.eigvals(N).real.max()) * np.eye(2)
            P = solve_lyapunov(A)
            assert np.max(np.abs(A.T @ P + P @ A + np.eye(2))) < 1e-10
            assert np.all(np.linalg.eigvalsh(P) > 0)

    def test_rejects_unstable_block(self):
        with pytest.raises(NotHurwitz):
            solve_lyapunov(np.array([[0.0, 1.0], [1.0, -1.0]]))

    def test_rejects_wrong_shape(self):
        with pytest.raises(StructureMismatch):
            solve_lyapunov(np.eye(3))

    def test_common_P_certifies_both_subsystems(self):
        A1, A2 = compliant_matrix(), safety_matrix()
        P, margin = find_common_P(A1, A2)
        assert margin > 0
        assert np.allclose(P, P.T)
        assert np.linalg.eigvalsh(P).min() > 0
        assert margin == pytest.approx(lyapunov_margin([A1, A2], P))
        for A in (A1, A2):
            assert np.linalg.eigvalsh(A.T @ P + P @ A).max() < 0

    def test_common_P_is_block_diagonal_per_axis(self):
        A1 = subsystem_matrix([10.0, 5.0], [15.0, 8.0])
        A2 = subsystem_matrix([40.0, 20.0], [50.0, 25.0])
        P, _ = find_common_P(A1, A2)
        assert P[0, 1] == 0.0 and P[0, 3] == 0.0 and P[1, 2] == 0.0

    def test_no_common_P_for_unstable_axis(self):
        A1 = compliant_matrix()
        A2 = np.array([
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, -50.0, 0.0],
            [0.0, -40.0, 0.0, -50.0],
        ])
        with pytest.raises(NoCommonP):
            find_common_P(A1, A2)

    def test_value_adds_gain_error_terms(self):
        P = 2.0 * np.eye(2)
        e_a = np.array([1.0, 0.0])
        K_tilde = [np.array([[2.0, 0.0]]), np.zeros((1, 2))]
        Gamma = [np.array([[4.0]]), np.array([[1.0]])]
        assert lyapunov_value(e_a, K_tilde, P, Gamma) == pytest.approx(1.0 + 0.5)

    def test_trace_uses_backward_difference(self):
        records = lyapunov_trace(np.array([0.0, 0.5, 1.0]), np.array([3.0, 2.0, 2.0]))
        assert [r.Vdot_observed for r in records] == [0.0, -2.0, 0.0]


class TestAdaptiveGainSet:
    def test_initialize_starts_at_matching_gains(self, state_space, models):
        A_a, B_a = state_space
        gains = AdaptiveGainSet.initialize(A_a, B_a, models.A1, models.A2, [10.0, 8.0])
        assert np.allclose(gains.active(2), gains.K_star[1])
        assert all(np.allclose(Kt, 0.0) for Kt in gains.tilde())
        assert gains.margin > 0
        assert gains.value(np.zeros(4)) == 0.0

    def test_offset_shifts_every_entry(self, state_space, models):
        A_a, B_a = state_space
        gains = AdaptiveGainSet.initialize(A_a, B_a, models.A1, models.A2, [1.0, 1.0], 0.5)
        assert np.allclose(gains.tilde()[0], 0.5)

    def test_rejects_nonpositive_rates(self):
        with pytest.raises(StructureMismatch):
            AdaptiveGainSet(
                K=[np.zeros((1, 2))] * 2,
                Gamma=[np.diag([0.0]), np.diag([1.0])],
                P=np.eye(2),
                K_star=[np.zeros((1, 2))] * 2,
            )

    def test_gain_error_decays_lyapunov_function_along_closed_loop(self, state_space, models):
        A_a, B_a = state_space
        gains = AdaptiveGainSet.initialize(A_a, B_a, models.A1, models.A2, [10.0, 8.0], 1.0)
        E_r = np.zeros(4)
        E = np.array([0.05, -0.03, 0.0, 0.0])
        f = np.array([0.5, 0.2])
        dt = 1e-4
        values = []
        for _ in range(2000):
            K = gains.active(1)
            e_a = E - E_r
            values.append(gains.value(e_a))
            Edot = A_a @ E + B_a @ control_uc(K, E, f)
            E_rdot = models.A1 @ E_r + B_a @ f
            gains.K[0] = gain_update_step(K, gains.Gamma[0], B_a, gains.P, e_a, E, dt)
            E = E + dt * Edot
            E_r = E_r + dt * E_rdot
        assert values[-1] < values[0]
        assert np.max(np.diff(values)) < 1e-7


def test_single_axis_gain_rate_uses_lower_row_of_P():
    A = np.array([[0.0, 1.0], [-10.0, -15.0]])
    P = solve_lyapunov(A)
    B_a = np.array([[0.0], [1.0]])
    rate = gain_rate(np.eye(1), B_a, P, np.array([0.1, 0.0]), np.array([1.0, 0.0]))
    assert np.allclose(rate, [[-P[1, 0] * 0.1, 0.0]])


def test_identical_subsystems_give_unit_margin():
    A = compliant_matrix()
    _, margin = find_common_P(A, A)
    assert margin == pytest.approx(1.0)
