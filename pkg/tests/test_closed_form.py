import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import diag_channel, diag_params
from isacopt.closed_form import (
    Branch,
    Regime,
    classify_regime,
    ee_water_level,
    se_com_powers,
    solve_comm_dominated,
    solve_ee_com,
    solve_se_com,
    solve_sensing_dominated,
    water_level_for_rate,
)
from isacopt.errors import EEDegenerate, InfeasibleError, NoCommChannel
from isacopt.model import CommChannel, QosTargets, SystemParams, crb_from_powers, generate_channel, rate_from_powers
from reference import duration_scan, ee_scalar_scan, water_level_scan

# Frozen reference outputs (see reference.py for how they were produced).
EE_UNIT_P = 1.718281828459045  # golden-section scan of log2(1+p)/(p+1); analytically e - 1
EE_UNIT_UPS = 1.4426950408889634  # log2(e)
EE_UNIT_2PC_P = 2.5911215  # same scan with P_c doubled
SE_41_R2 = (0.75, 0.0)
# two-mode instance, gains [4, 1], eta=0.5, P_c=1, R=1.4755, T = 150/256 x 1e-7 s
DUR_RATE = 1.4755
DUR_ENERGY = 4.70115684428795e-05  # 400x400 (split, tau) scan, three zooms
DUR_TAU = 2.0479338952654215e-05


def duration_instance():
    p = SystemParams(m_tx=2, n_rx_sense=2, n_rx_comm=2, bandwidth_hz=1e7, noise_comm_w=1.0, noise_sense_w=1e-12,
                     pa_efficiency=0.5, p_nontrans_w=1.0, t_min_s=150e-7, t_max_s=256e-7)
    return p, diag_channel([4.0, 1.0])


class TestReferences:
    """The brute-force references still reproduce their frozen values."""

    def test_ee_scan(self):
        p, ups = ee_scalar_scan(1.0, 1.0, 1.0)
        assert p == pytest.approx(EE_UNIT_P, rel=1e-6)
        assert ups == pytest.approx(EE_UNIT_UPS, rel=1e-6)
        assert ee_scalar_scan(1.0, 1.0, 2.0)[0] == pytest.approx(EE_UNIT_2PC_P, rel=1e-6)

    def test_water_level_scan(self):
        np.testing.assert_allclose(water_level_scan([4, 1], 2.0), SE_41_R2, atol=1e-12)

    @pytest.mark.slow
    def test_duration_scan(self):
        e, tau, _ = duration_scan([4, 1], 0.5, 1.0, DUR_RATE, 150e-7, 256e-7)
        assert e == pytest.approx(DUR_ENERGY, rel=1e-9)
        assert tau == pytest.approx(DUR_TAU, rel=1e-6)


class TestEnergyEfficient:
    def test_unit_example(self):
        # eta * P_c = 1 with a unit-gain channel puts the level at e
        assert ee_water_level(np.array([1.0]), 1.0) == pytest.approx(math.e, rel=1e-14)
        p = diag_params(1, pa_efficiency=0.5, p_nontrans_w=2.0)
        ee = solve_ee_com(p, diag_channel([1.0]))
        assert ee.p[0] == pytest.approx(EE_UNIT_P, rel=1e-12)
        assert ee.upsilon == pytest.approx(EE_UNIT_UPS, rel=1e-12)

    def test_doubling_pc_raises_power(self):
        a = solve_ee_com(diag_params(1, pa_efficiency=0.5, p_nontrans_w=2.0), diag_channel([1.0]))
        b = solve_ee_com(diag_params(1, pa_efficiency=0.5, p_nontrans_w=4.0), diag_channel([1.0]))
        assert b.p[0] > a.p[0]
        assert b.p[0] == pytest.approx(EE_UNIT_2PC_P, rel=1e-6)

    def test_null_modes_get_nothing(self):
        p = diag_params(3)
        ee = solve_ee_com(p, diag_channel([2.0, 1.0], m=3))
        assert ee.p[2] == 0.0 and ee.p[0] > 0

    def test_ee_ratio_is_max(self):
        p = diag_params(2)
        ch = diag_channel([4.0, 1.0])
        ee = solve_ee_com(p, ch)
        for k in np.linspace(0.5, 1.5, 11):
            q = k * ee.p
            ratio = np.sum(np.log2(1 + ch.gains * q)) / (q.sum() / p.pa_efficiency + p.p_nontrans_w)
            assert ratio <= ee.ee_ratio * (1 + 1e-12)
        assert ee.xi_star(1.0, p.t_max_s) == pytest.approx(ee.ee_ratio / p.t_max_s)

    def test_errors(self):
        with pytest.raises(EEDegenerate):
            solve_ee_com(diag_params(1, p_nontrans_w=0.0), diag_channel([1.0]))
        with pytest.raises(NoCommChannel):
            solve_ee_com(diag_params(2), CommChannel.from_matrix(np.zeros((2, 2))))


class TestSpectrumEfficient:
    def test_two_mode_example(self):
        p = diag_params(2)
        pw, _ = se_com_powers(p, diag_channel([4.0, 1.0]), 2.0)
        np.testing.assert_allclose(pw, SE_41_R2, atol=1e-14)
        q = solve_se_com(p, diag_channel([4.0, 1.0]), 2.0)
        assert np.trace(q).real == pytest.approx(0.75)

    def test_symmetric_and_zero(self):
        p = diag_params(2)
        pw, _ = se_com_powers(p, diag_channel([1.0, 1.0]), 2.0)
        np.testing.assert_allclose(pw, [1.0, 1.0], rtol=1e-14)
        small, _ = se_com_powers(p, diag_channel([4.0, 1.0]), 1e-9)
        assert small.sum() < 1e-8

    def test_rank_zero_infeasible(self):
        with pytest.raises(InfeasibleError):
            solve_se_com(diag_params(2), CommChannel.from_matrix(np.zeros((2, 2))), 1.0)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=6), st.floats(1e-3, 60.0))
    def test_rate_met_with_equality(self, gains, rate):
        gains = sorted(gains, reverse=True)
        n = 1.0 / np.asarray(gains)
        mu = water_level_for_rate(n, rate)
        assert np.sum(np.log2(np.maximum(mu / n, 1.0))) == pytest.approx(rate, rel=1e-10)


class TestCommDominated:
    def test_zero_rate(self):
        p = diag_params(2)
        sol = solve_comm_dominated(p, diag_channel([4.0, 1.0]), QosTargets(0.0, 1.0))
        assert sol.tau_s == p.t_min_s and sol.energy(p) == 0.0 and np.all(sol.p == 0)

    def test_interior_branch_against_scan(self):
        p, ch = duration_instance()
        sol = solve_comm_dominated(p, ch, QosTargets(DUR_RATE, 1.0))
        assert sol.branch is Branch.EE_INTERIOR
        assert p.t_min_s < sol.tau_s < p.t_max_s
        assert sol.tau_s == pytest.approx(DUR_RATE * p.t_max_s / sol.ee_rate, rel=1e-14)
        assert sol.tau_s == pytest.approx(DUR_TAU, rel=1e-4)
        assert sol.energy(p) == pytest.approx(DUR_ENERGY, rel=1e-6)
        assert sol.energy(p) <= DUR_ENERGY * (1 + 1e-12)

    def test_branches(self):
        p, ch = duration_instance()
        ups = solve_ee_com(p, ch).upsilon
        low = solve_comm_dominated(p, ch, QosTargets(0.3 * ups, 1.0))
        assert low.branch is Branch.SHORTEST_ON and low.tau_s == p.t_min_s
        assert rate_from_powers(p, ch, low.p, low.tau_s) == pytest.approx(0.3 * ups, rel=1e-12)
        high = solve_comm_dominated(p, ch, QosTargets(1.2 * ups, 1.0))
        assert high.branch is Branch.FULL_BLOCK and high.tau_s == p.t_max_s

    def test_tau_monotone_in_pc(self):
        # P_c = 0 forces tau = T_max, so tau can only shrink as P_c grows
        params = SystemParams.defaults()
        ch = generate_channel(params, 100.0, 1.0, 2)
        taus = [solve_comm_dominated(params.with_(p_nontrans_w=pc), ch, QosTargets(12.0, 1.0)).tau_s
                for pc in np.linspace(0.0, 200.0, 41)]
        assert taus[0] == params.t_max_s
        assert np.all(np.diff(taus) <= 0)
        assert taus[-1] < taus[0]


class TestSensingDominated:
    def test_unit_example(self):
        p = SystemParams(m_tx=2, n_rx_sense=2, n_rx_comm=1, bandwidth_hz=1.0, noise_comm_w=1.0, noise_sense_w=1.0,
                         pa_efficiency=0.5, p_nontrans_w=1.0, t_min_s=1.0, t_max_s=2.0)
        sol = solve_sensing_dominated(p, QosTargets(0.0, 4.0))
        np.testing.assert_allclose(sol.q, np.eye(2))
        assert sol.tau_s == 1.0

    def test_scaling_and_activity(self, calibrated):
        a = solve_sensing_dominated(calibrated, QosTargets(0.0, 0.2))
        b = solve_sensing_dominated(calibrated, QosTargets(0.0, 0.1))
        assert np.trace(b.q).real == pytest.approx(2 * np.trace(a.q).real, rel=1e-14)
        assert crb_from_powers(calibrated, a.p, a.tau_s) == pytest.approx(0.2, rel=1e-14)


class TestClassify:
    def test_loose_crb_is_comm(self, defaults):
        ch = generate_channel(defaults, 100.0, 1.0, 7)
        assert classify_regime(defaults, ch, QosTargets(30.0, 1e9)).regime is Regime.COMM_DOMINATED

    def test_zero_rate_is_sensing(self, defaults):
        ch = generate_channel(defaults, 100.0, 1.0, 7)
        dec = classify_regime(defaults, ch, QosTargets(0.0, 0.25))
        assert dec.regime is Regime.SENSING_DOMINATED
        assert dec.solution.tau_s == pytest.approx(15e-6)

    @pytest.mark.parametrize("seed", range(5))
    def test_rank_deficient_never_comm(self, defaults, seed):
        p = defaults.with_(n_rx_comm=4)
        ch = generate_channel(p, 100.0, 1.0, seed)
        for g in (1e-12, 1.0, 1e9):
            assert classify_regime(p, ch, QosTargets(10.0, g)).regime is not Regime.COMM_DOMINATED

    def test_rank_zero_raises(self):
        with pytest.raises(InfeasibleError):
            classify_regime(diag_params(2), CommChannel.from_matrix(np.zeros((2, 2))), QosTargets(1.0, 1.0))
