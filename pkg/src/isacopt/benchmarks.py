"""Benchmark transmission schemes evaluated under the same QoS constraints."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .closed_form import solve_comm_dominated
from .errors import InfeasibleError, NotApplicable
from .general import solve_isac
from .model import (
    CommChannel,
    QosTargets,
    SystemParams,
    covariance_from_powers,
    crb_from_powers,
    energy_from_powers,
    rate_from_powers,
)

TAU_GRID = 64


class Scheme(str, enum.Enum):
    ISOTROPIC = "Isotropic"
    COMM_BASED = "CommBased"
    SENSING_BASED = "SensingBased"
    ALWAYS_ON = "AlwaysOn"


@dataclass(frozen=True)
class BenchmarkResult:
    scheme: Scheme
    q: np.ndarray
    p: np.ndarray
    tau_s: float
    energy_j: float
    rate_achieved: float
    crb_achieved: float
    feasible: bool
    alpha: float | None = None
    alpha_floored: bool = False
    p_w: float | None = None
    note: str = ""


def _result(params, channel, scheme, p, tau, **kw) -> BenchmarkResult:
    p = np.asarray(p, dtype=float)
    return BenchmarkResult(
        scheme=scheme,
        q=covariance_from_powers(channel.v, p),
        p=p,
        tau_s=float(tau),
        energy_j=energy_from_powers(params, p, tau),
        rate_achieved=rate_from_powers(params, channel, p, tau),
        crb_achieved=crb_from_powers(params, p, tau),
        feasible=kw.pop("feasible", True),
        **kw,
    )


def _infeasible(params, channel, scheme, note) -> BenchmarkResult:
    m = params.m_tx
    return BenchmarkResult(scheme=scheme, q=np.zeros((m, m), complex), p=np.zeros(m), tau_s=params.t_min_s,
                           energy_j=float("nan"), rate_achieved=float("nan"), crb_achieved=float("inf"),
                           feasible=False, note=note)


def isotropic_rate_power(params: SystemParams, channel: CommChannel, rate: float, tau: float) -> float:
    """Smallest p with (tau/T_max) sum_i log2(1 + lambda_i^2 p / sigma_c^2) >= rate."""
    if rate <= 0:
        return 0.0
    if channel.rank_r == 0:
        raise InfeasibleError("positive rate requested over a rank-0 channel")
    g = channel.sigma**2 / params.noise_comm_w
    target = rate * params.t_max_s / tau * np.log(2)
    f = lambda p: float(np.sum(np.log1p(g * p))) - target
    # strongest mode alone gives an upper bound, the equal-gain bound a lower one
    hi = np.expm1(target) / g[-1]
    lo = np.expm1(target / len(g)) / g[0]
    if f(lo) >= 0:
        return float(lo)
    while f(hi) < 0:  # rounding when lo == hi
        hi *= 1 + 1e-12
    p = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    while f(p) < 0:
        p = np.nextafter(p, np.inf)
    return float(p)


def _sensing_power(params: SystemParams, targets: QosTargets, tau: float) -> float:
    return params.crb_coeff * params.m_tx / (tau * targets.crb_max)


def bench_isotropic(params: SystemParams, channel: CommChannel, targets: QosTargets) -> BenchmarkResult:
    """Q = p I with p and tau both optimised."""
    if targets.rate_bps_hz > 0 and channel.rank_r == 0:
        return _infeasible(params, channel, Scheme.ISOTROPIC, "rank-0 channel with positive rate")
    m = params.m_tx

    def power(tau):
        return max(_sensing_power(params, targets, tau), isotropic_rate_power(params, channel, targets.rate_bps_hz, tau))

    def energy(tau):
        return (m * power(tau) / params.pa_efficiency + params.p_nontrans_w) * tau

    tmin, tmax = params.t_min_s, params.t_max_s
    grid = np.linspace(tmin, tmax, TAU_GRID)
    vals = np.array([energy(t) for t in grid])
    k = int(np.argmin(vals))
    best_tau, best = grid[k], vals[k]
    if tmax > tmin:
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, TAU_GRID - 1)]
        res = minimize_scalar(energy, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13 * tmax, "maxiter": 500})
        if res.fun < best:
            best_tau = float(res.x)
    p = power(best_tau)
    return _result(params, channel, Scheme.ISOTROPIC, np.full(m, p), best_tau, p_w=p)


def bench_comm_based(params: SystemParams, channel: CommChannel, targets: QosTargets) -> BenchmarkResult:
    """Communications-dominated covariance scaled up until the CRB holds."""
    if channel.rank_r < params.m_tx:
        raise NotApplicable("communication-based design needs a full-rank channel")
    com = solve_comm_dominated(params, channel, targets)
    crb_com = crb_from_powers(params, com.p, com.tau_s)
    if not np.isfinite(crb_com):
        return _infeasible(params, channel, Scheme.COMM_BASED, "comm-dominated covariance is singular")
    raw = crb_com / targets.crb_max
    alpha = max(1.0, raw)
    p = alpha * com.p
    # guard the last ulp so the CRB check cannot fail on rounding
    while crb_from_powers(params, p, com.tau_s) > targets.crb_max:
        alpha = np.nextafter(alpha, np.inf)
        p = alpha * com.p
    return _result(params, channel, Scheme.COMM_BASED, p, com.tau_s, alpha=float(alpha), alpha_floored=raw < 1.0)


def bench_sensing_based(params: SystemParams, channel: CommChannel, targets: QosTargets) -> BenchmarkResult:
    """Isotropic transmission at tau = T_min with the smaller of two binding powers raised."""
    if targets.rate_bps_hz > 0 and channel.rank_r == 0:
        return _infeasible(params, channel, Scheme.SENSING_BASED, "rank-0 channel with positive rate")
    tau = params.t_min_s
    p1 = isotropic_rate_power(params, channel, targets.rate_bps_hz, tau)
    p2 = _sensing_power(params, targets, tau)
    p = max(p1, p2)
    return _result(params, channel, Scheme.SENSING_BASED, np.full(params.m_tx, p), tau, p_w=p)


def bench_always_on(params: SystemParams, channel: CommChannel, targets: QosTargets, **kw) -> BenchmarkResult:
    """Optimal covariance with the transmitter on for the whole block."""
    sol = solve_isac(params.with_(t_min_s=params.t_max_s), channel, targets, **kw)
    if sol.regime.value == "Infeasible":
        return _infeasible(params, channel, Scheme.ALWAYS_ON, "infeasible")
    return BenchmarkResult(scheme=Scheme.ALWAYS_ON, q=sol.q, p=sol.p, tau_s=sol.tau_s, energy_j=sol.energy_j,
                           rate_achieved=sol.rate_achieved, crb_achieved=sol.crb_achieved, feasible=True)


SCHEMES = {
    "isotropic": bench_isotropic,
    "comm_based": bench_comm_based,
    "sensing_based": bench_sensing_based,
    "always_on": bench_always_on,
}


def run_benchmarks(params, channel, targets, names=tuple(SCHEMES)) -> dict[str, BenchmarkResult]:
    """Run the named schemes; NotApplicable schemes are omitted."""
    out = {}
    for name in names:
        try:
            out[name] = SCHEMES[name](params, channel, targets)
        except NotApplicable:
            continue
    return out
