"""Closed-form solvers for the communications- and sensing-dominated regimes.

Both communication designs are water-filling over the channel eigenmodes
``p_i = max(0, mu - n_i)`` with noise-to-gain ratios ``n_i = sigma_c^2 /
lambda_i^2``.  The water level ``mu`` is the single scalar to find.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import EEDegenerate, InfeasibleError, NoCommChannel
from .model import (
    CommChannel,
    QosTargets,
    SystemParams,
    covariance_from_powers,
    crb_from_powers,
    energy_from_powers,
    rate_from_powers,
)

LN2 = np.log(2.0)
DOMINANCE_RTOL = 1e-9


class Regime(str, enum.Enum):
    COMM_DOMINATED = "CommDominated"
    SENSING_DOMINATED = "SensingDominated"
    GENERAL = "General"
    INFEASIBLE = "Infeasible"


class Branch(str, enum.Enum):
    SHORTEST_ON = "ShortestOn"
    EE_INTERIOR = "EEInterior"
    FULL_BLOCK = "FullBlock"


@dataclass(frozen=True)
class IsacSolution:
    """Optimal (or best found) operating point of one block.

    ``p`` are eigenmode powers in the basis ``v`` so that Q = V diag(p) V^H;
    metrics are evaluated on (p, tau) rather than on the dense ``q``.
    """

    q: np.ndarray
    p: np.ndarray
    v: np.ndarray
    tau_s: float
    energy_j: float
    rate_achieved: float
    crb_achieved: float
    regime: Regime
    duals: tuple[float, float] | None = None
    diagnostics: dict | None = None

    @property
    def e(self) -> np.ndarray:
        return self.p * self.tau_s


def make_solution(params, channel, p, v, tau_s, regime, duals=None, diagnostics=None) -> IsacSolution:
    p = np.asarray(p, dtype=float)
    rate = rate_from_powers(params, channel, p, tau_s) if channel is not None else float("nan")
    return IsacSolution(
        q=covariance_from_powers(v, p),
        p=p,
        v=v,
        tau_s=float(tau_s),
        energy_j=energy_from_powers(params, p, tau_s),
        rate_achieved=rate,
        crb_achieved=crb_from_powers(params, p, tau_s),
        regime=regime,
        duals=duals,
        diagnostics=diagnostics,
    )


def infeasible_solution(params: SystemParams, channel: CommChannel | None = None, reason: str = "") -> IsacSolution:
    m = params.m_tx
    return IsacSolution(
        q=np.zeros((m, m), complex),
        p=np.zeros(m),
        v=np.eye(m, dtype=complex) if channel is None else channel.v,
        tau_s=params.t_min_s,
        energy_j=float("nan"),
        rate_achieved=float("nan"),
        crb_achieved=float("inf"),
        regime=Regime.INFEASIBLE,
        diagnostics={"reason": reason},
    )


# ----------------------------------------------------------------------------
# water-filling primitives


def _noise_to_gain(params: SystemParams, channel: CommChannel) -> np.ndarray:
    return params.noise_comm_w / channel.sigma**2


def _pad(params: SystemParams, p_head: np.ndarray) -> np.ndarray:
    p = np.zeros(params.m_tx)
    p[: len(p_head)] = p_head
    return p


def water_level_for_rate(n: np.ndarray, rate: float) -> float:
    """Level mu with sum_i log2(mu / n_i)^+ = rate, for increasing ``n``.

    Closed form on the active set: for the k strongest modes
    log mu = (rate ln2 + sum_{i<=k} ln n_i) / k.
    """
    if rate <= 0:
        return float(n[0])
    log_n = np.log(n)
    csum = np.cumsum(log_n)
    for k in range(1, len(n) + 1):
        log_mu = (rate * LN2 + csum[k - 1]) / k
        if k == len(n) or log_mu <= log_n[k]:
            return float(np.exp(log_mu))
    raise AssertionError("unreachable")


def ee_water_level(n: np.ndarray, eta_pc: float) -> float:
    """Level mu solving sum_i [mu ln(mu/n_i) - (mu - n_i)]^+ = eta P_c.

    This is the zero of rate - xi*(tr(Q)/eta + P_c) rewritten in terms of the
    level, mu = eta / (xi ln 2).  The left side is increasing in mu.
    """

    def g(mu):
        a = n[n < mu]
        return float(np.sum(mu * np.log(mu / a) - (mu - a))) - eta_pc

    lo = float(n[0])
    hi = 2.0 * lo
    while g(hi) <= 0:
        hi *= 2.0
    return brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


# ----------------------------------------------------------------------------
# communications-dominated case


@dataclass(frozen=True)
class EeComAllocation:
    p: np.ndarray
    q: np.ndarray
    level: float
    ee_ratio: float  # bits/s/Hz per Watt of (tr(Q)/eta + P_c); equals xi* R T_max
    upsilon: float

    def xi_star(self, rate_bps_hz: float, t_max_s: float) -> float:
        return self.ee_ratio / (rate_bps_hz * t_max_s)


def solve_ee_com(params: SystemParams, channel: CommChannel) -> EeComAllocation:
    """Covariance maximising bits-per-Joule with no rate floor."""
    if channel.rank_r == 0:
        raise NoCommChannel("channel has rank 0")
    if params.p_nontrans_w <= 0:
        raise EEDegenerate("P_c = 0: energy-efficient power tends to zero")
    n = _noise_to_gain(params, channel)
    mu = ee_water_level(n, params.pa_efficiency * params.p_nontrans_w)
    p = _pad(params, np.maximum(mu - n, 0.0))
    ups = float(np.sum(np.log2(np.maximum(mu / n, 1.0))))
    ratio = ups / (p.sum() / params.pa_efficiency + params.p_nontrans_w)
    return EeComAllocation(p=p, q=covariance_from_powers(channel.v, p), level=mu, ee_ratio=ratio, upsilon=ups)


def se_com_powers(params: SystemParams, channel: CommChannel, rate_floor: float) -> tuple[np.ndarray, float]:
    """Minimum-power eigenmode powers meeting log2 det(...) = rate_floor, plus the level."""
    if rate_floor > 0 and channel.rank_r == 0:
        raise InfeasibleError("positive rate requested over a rank-0 channel")
    if rate_floor <= 0:
        return np.zeros(params.m_tx), 0.0
    n = _noise_to_gain(params, channel)
    mu = water_level_for_rate(n, rate_floor)
    return _pad(params, np.maximum(mu - n, 0.0)), mu


def solve_se_com(params: SystemParams, channel: CommChannel, rate_floor: float) -> np.ndarray:
    p, _ = se_com_powers(params, channel, rate_floor)
    return covariance_from_powers(channel.v, p)


@dataclass(frozen=True)
class CommDominatedSolution:
    q: np.ndarray
    p: np.ndarray
    tau_s: float
    branch: Branch
    level: float
    ee_rate: float | None = None
    xi_star: float | None = None
    q_level: float | None = None

    def energy(self, params: SystemParams) -> float:
        return energy_from_powers(params, self.p, self.tau_s)

    def nu(self, params: SystemParams) -> float:
        """Rate dual consistent with this water level (zero when nothing is sent)."""
        return self.level * LN2 * params.t_max_s / params.pa_efficiency


def solve_comm_dominated(params: SystemParams, channel: CommChannel, targets: QosTargets) -> CommDominatedSolution:
    r_req = targets.rate_bps_hz
    tmin, tmax = params.t_min_s, params.t_max_s
    eta = params.pa_efficiency

    def se(rate, tau, branch, ups=None):
        p, mu = se_com_powers(params, channel, rate)
        return CommDominatedSolution(
            q=covariance_from_powers(channel.v, p), p=p, tau_s=tau, branch=branch,
            level=mu, ee_rate=ups, q_level=eta / (mu * LN2) if mu > 0 else None,
        )

    if r_req == 0:
        m = params.m_tx
        return CommDominatedSolution(q=np.zeros((m, m), complex), p=np.zeros(m), tau_s=tmin,
                                     branch=Branch.SHORTEST_ON, level=0.0)
    if channel.rank_r == 0:
        raise InfeasibleError("positive rate requested over a rank-0 channel")
    if params.p_nontrans_w == 0:
        return se(r_req, tmax, Branch.FULL_BLOCK)

    ee = solve_ee_com(params, channel)
    ups = ee.upsilon
    if ups > r_req * tmax / tmin:
        return se(r_req * tmax / tmin, tmin, Branch.SHORTEST_ON, ups)
    if ups >= r_req:
        return CommDominatedSolution(
            q=ee.q, p=ee.p, tau_s=r_req * tmax / ups, branch=Branch.EE_INTERIOR, level=ee.level,
            ee_rate=ups, xi_star=ee.xi_star(r_req, tmax),
        )
    return se(r_req, tmax, Branch.FULL_BLOCK, ups)


# ----------------------------------------------------------------------------
# sensing-dominated case


@dataclass(frozen=True)
class SensingDominatedSolution:
    p_w: float
    tau_s: float
    m_tx: int

    @property
    def p(self) -> np.ndarray:
        return np.full(self.m_tx, self.p_w)

    @property
    def q(self) -> np.ndarray:
        return self.p_w * np.eye(self.m_tx, dtype=complex)

    def gamma(self, params: SystemParams) -> float:
        """CRB dual for which the tail stationarity holds at e = p tau."""
        e = self.p_w * self.tau_s
        return e * e / (params.pa_efficiency * params.crb_coeff)


def solve_sensing_dominated(params: SystemParams, targets: QosTargets) -> SensingDominatedSolution:
    """Isotropic transmission at the shortest on-duration with the CRB active."""
    m = params.m_tx
    p = params.crb_coeff * m / (params.t_min_s * targets.crb_max)
    return SensingDominatedSolution(p_w=p, tau_s=params.t_min_s, m_tx=m)


# ----------------------------------------------------------------------------
# regime classification


@dataclass(frozen=True)
class RegimeDecision:
    regime: Regime
    solution: IsacSolution | None
    comm: CommDominatedSolution | None = None
    sensing: SensingDominatedSolution | None = None


def classify_regime(params: SystemParams, channel: CommChannel, targets: QosTargets) -> RegimeDecision:
    """Route to a closed form when one constraint alone determines the optimum.

    Raises InfeasibleError for a positive rate over a rank-0 channel.
    """
    gam, r_req = targets.crb_max, targets.rate_bps_hz
    comm = solve_comm_dominated(params, channel, targets)
    crb_com = crb_from_powers(params, comm.p, comm.tau_s)
    if crb_com <= gam * (1 + DOMINANCE_RTOL):
        sol = make_solution(params, channel, comm.p, channel.v, comm.tau_s, Regime.COMM_DOMINATED,
                            duals=(0.0, comm.nu(params)), diagnostics={"branch": comm.branch.value})
        return RegimeDecision(Regime.COMM_DOMINATED, sol, comm=comm)

    sen = solve_sensing_dominated(params, targets)
    r_sen = rate_from_powers(params, channel, sen.p, sen.tau_s)
    if r_sen >= r_req * (1 - DOMINANCE_RTOL):
        sol = make_solution(params, channel, sen.p, channel.v, sen.tau_s, Regime.SENSING_DOMINATED,
                            duals=(sen.gamma(params), 0.0))
        return RegimeDecision(Regime.SENSING_DOMINATED, sol, comm=comm, sensing=sen)
    return RegimeDecision(Regime.GENERAL, None, comm=comm, sensing=sen)
