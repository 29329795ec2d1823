import numpy as np
import pytest

from conftest import CALIBRATED_SENSE_DBM
from isacopt.closed_form import Regime, classify_regime, solve_comm_dominated, solve_sensing_dominated
from isacopt.errors import DomainError, InfeasibleError
from isacopt.general import solve_isac
from isacopt.model import (
    CommChannel,
    QosTargets,
    SystemParams,
    covariance_from_powers,
    dbm_to_w,
    generate_channel,
)
from isacopt.oracle import make_scene, mc_validate_crb, oracle_solve, scene_from


def small(m=2, nc=2, seed=4, **kw):
    p = SystemParams.defaults(m_tx=m, n_rx_comm=nc, noise_sense_w=dbm_to_w(CALIBRATED_SENSE_DBM), **kw)
    return p, generate_channel(p, 100.0, 1.0, seed)


class TestOracleSolve:
    def test_zero_rate_matches_isotropic_closed_form(self):
        p, ch = small()
        t = QosTargets(0.0, 0.02)
        sen = solve_sensing_dominated(p, t)
        expect = (p.m_tx * sen.p_w / p.pa_efficiency + p.p_nontrans_w) * sen.tau_s
        assert oracle_solve(p, ch, t).energy_j == pytest.approx(expect, rel=1e-4)

    def test_comm_dominated(self):
        p, ch = small()
        t = QosTargets(8.0, 1e9)
        assert classify_regime(p, ch, t).regime is Regime.COMM_DOMINATED
        ref = solve_comm_dominated(p, ch, t).energy(p)
        assert oracle_solve(p, ch, t).energy_j == pytest.approx(ref, rel=1e-3)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [1, 2])
    def test_upper_bounds_general(self, seed):
        p, ch = small(m=3, nc=3, seed=seed)
        t = QosTargets(10.0, 0.05)
        ora, sol = oracle_solve(p, ch, t), solve_isac(p, ch, t)
        assert ora.energy_j >= sol.energy_j * (1 - 1e-3)
        assert abs(ora.energy_j - sol.energy_j) / ora.energy_j <= 1e-3

    def test_feasible_point(self):
        p, ch = small()
        t = QosTargets(8.0, 0.02)
        ora = oracle_solve(p, ch, t)
        pw = ora.e / ora.tau_s
        from isacopt.model import crb_from_powers, rate_from_powers

        assert rate_from_powers(p, ch, pw, ora.tau_s) >= t.rate_bps_hz * (1 - 1e-9)
        assert crb_from_powers(p, pw, ora.tau_s) <= t.crb_max * (1 + 1e-9)

    def test_diagonal_in_channel_basis(self):
        p, ch = small()
        ora = oracle_solve(p, ch, QosTargets(8.0, 0.02))
        q = covariance_from_powers(ch.v, ora.e / ora.tau_s)
        d = ch.v.conj().T @ q @ ch.v
        off = d - np.diag(np.diag(d))
        assert np.abs(off).sum() < 1e-9 * np.trace(q).real
        assert np.all(np.diag(d).real > 0)

    def test_rank_zero_with_rate_is_infeasible(self):
        p, _ = small()
        ch = CommChannel.from_matrix(np.zeros((2, 2), complex))
        with pytest.raises(InfeasibleError):
            oracle_solve(p, ch, QosTargets(1.0, 0.02))


class TestScene:
    def test_broadside_all_ones(self):
        p = SystemParams.defaults()
        s = scene_from(p, 1.0, 0.0, 0.0)
        np.testing.assert_allclose(s.h_s, np.ones((p.n_rx_sense, p.m_tx)), atol=1e-15)

    def test_deterministic(self):
        p = SystemParams.defaults()
        a, b = make_scene(p, 3, 5), make_scene(p, 3, 5)
        assert np.array_equal(a.h_s, b.h_s)

    @pytest.mark.parametrize("k", [1, 2, 4, 9])
    def test_rank_bound(self, k):
        p = SystemParams.defaults()
        s = make_scene(p, k, 2)
        assert np.linalg.matrix_rank(s.h_s) <= min(k, p.m_tx, p.n_rx_sense)
        assert s.k_count == k

    def test_needs_a_scatterer(self):
        with pytest.raises(DomainError):
            make_scene(SystemParams.defaults(), 0, 1)


@pytest.fixture(scope="module")
def defaults_solution():
    p = SystemParams.defaults()
    ch = generate_channel(p, 100.0, 1.0, 0)
    sol = solve_isac(p, ch, QosTargets(0.0, 0.25))
    return p, sol


class TestMonteCarlo:
    def test_noiseless(self, defaults_solution):
        p, sol = defaults_solution
        p0 = p.with_(noise_sense_w=0.0)
        rep = mc_validate_crb(p0, make_scene(p0, 3, 1), sol.q, sol.tau_s, trials=50)
        assert rep.empirical_sum_mse == 0.0

    def test_matches_exact_crb(self, defaults_solution):
        p, sol = defaults_solution
        assert round(sol.tau_s * p.bandwidth_hz) == 150
        rep = mc_validate_crb(p, make_scene(p, 3, 1), sol.q, sol.tau_s, trials=10_000, seed=3)
        assert abs(rep.ratio - 1) <= 0.03
        assert rep.rejected == 0
        assert np.isfinite(rep.crb_trace_pred) and rep.sample_cov_dev > 0

    def test_unbiased(self, defaults_solution):
        p, sol = defaults_solution
        scene = make_scene(p, 3, 1)
        rep = mc_validate_crb(p, scene, sol.q, sol.tau_s, trials=4000, seed=9)
        bias = rep.mean_estimate - scene.h_s
        # real and imaginary parts each carry half the complex variance
        band = 5 * rep.std_error / np.sqrt(2)
        assert np.all(np.abs(bias.real) <= band)
        assert np.all(np.abs(bias.imag) <= band)

    def test_order_independent_of_batch(self, defaults_solution):
        p, sol = defaults_solution
        scene = make_scene(p, 2, 1)
        a = mc_validate_crb(p, scene, sol.q, sol.tau_s, trials=600, seed=4)
        b = mc_validate_crb(p, scene, sol.q, sol.tau_s, trials=600, seed=4)
        assert a.empirical_sum_mse == b.empirical_sum_mse

    def test_rank_deficient_q_rejected(self, defaults_solution):
        p, sol = defaults_solution
        q = np.diag([1.0] * (p.m_tx - 1) + [0.0]).astype(complex)
        with pytest.raises(DomainError):
            mc_validate_crb(p, make_scene(p, 1, 1), q, sol.tau_s, trials=10)
