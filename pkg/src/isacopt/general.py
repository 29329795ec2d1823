"""General ISAC case: Lagrange dual over (gamma, nu) solved with an ellipsoid method.

Work happens on the eigenmode energies e_i = p_i * tau of the covariance in the
right-singular basis of the channel.  For fixed duals the inner minimiser is
available per subchannel (a cubic for the first r modes, a square root for the
rest) and the on-duration solves a scalar monotone equation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, root

from .closed_form import (
    LN2,
    IsacSolution,
    Regime,
    classify_regime,
    infeasible_solution,
    make_solution,
    se_com_powers,
)
from .errors import DegenerateDual, InfeasibleError
from .model import CommChannel, QosTargets, SystemParams

log = logging.getLogger(__name__)

ELLIPSOID_RADIUS = 1e4
MAX_ITER = 5000
GAP_RTOL = 1e-12
MIN_VOLUME = 1e-30
TAU_XTOL = 1e-12


# ----------------------------------------------------------------------------
# per-subchannel energies


def tail_energy(params: SystemParams, gamma: float) -> float:
    """Energy of each null-space (sensing only) mode: sqrt(eta gamma sigma_s^2 N_s / B)."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if gamma == 0:
        raise DegenerateDual("gamma = 0 gives zero sensing-only energy and an infinite CRB")
    return float(np.sqrt(params.pa_efficiency * gamma * params.crb_coeff))


@dataclass(frozen=True)
class CubicCoefficients:
    """Coefficients of a e^3 + b tau e^2 + c e + d tau = 0 and Cardano intermediates."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float
    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray


def cubic_coefficients(params: SystemParams, gains, gamma: float, nu: float, tau: float) -> CubicCoefficients:
    g = np.asarray(gains, dtype=float) / params.noise_comm_w
    eta = params.pa_efficiency
    a = g / eta
    b = 1.0 / eta - nu / (LN2 * params.t_max_s) * g
    d = -gamma * params.crb_coeff
    c = d * g
    bt = b * tau
    k1 = bt / (3 * a)
    k2 = (27 * a**2 * d * tau - 9 * a * bt * c + 2 * bt**3) / (54 * a**3)
    k3 = (3 * a * c - bt**2) / (9 * a**2)
    return CubicCoefficients(a, b, c, d, k1, k2, k3)


def _largest_real_root(beta, kappa, delta):
    """Largest real root of x^3 + beta x^2 + kappa x + delta, vectorised.

    The variable is rescaled so every coefficient is at most one in magnitude
    before applying Cardano (one real root) or the trigonometric form (three
    real roots), then refined by Newton steps.
    """
    s = np.maximum.reduce([np.abs(beta), np.sqrt(np.abs(kappa)), np.cbrt(np.abs(delta))])
    s = np.where(s > 0, s, 1.0)
    bb, kk, dd = beta / s, kappa / s**2, delta / s**3
    k1 = bb / 3
    k3 = (kk - bb * bb / 3) / 3
    k2 = (2 * bb**3 / 27 - bb * kk / 3 + dd) / 2
    disc = k2 * k2 + k3**3

    one = disc >= 0
    sq = np.sqrt(np.where(one, disc, 0.0))
    u = np.cbrt(-k2 - np.copysign(sq, k2))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_one = np.where(u != 0, u - k3 / u, 0.0)
    rr = np.sqrt(np.where(one, 0.0, -k3))
    with np.errstate(divide="ignore", invalid="ignore"):
        cosarg = np.where(one, 0.0, -k2 / rr**3)
    t_three = 2 * rr * np.cos(np.arccos(np.clip(cosarg, -1, 1)) / 3)
    y = np.where(one, t_one, t_three) - k1

    for _ in range(2):
        f = ((y + bb) * y + kk) * y + dd
        fp = (3 * y + 2 * bb) * y + kk
        step = np.where(fp != 0, f / np.where(fp != 0, fp, 1.0), 0.0)
        y_new = y - step
        f_new = ((y_new + bb) * y_new + kk) * y_new + dd
        y = np.where(np.abs(f_new) <= np.abs(f), y_new, y)
    return y * s, (bb, kk, dd, s)


def _bisect_positive_root(beta, kappa, delta):
    """Bisection fallback for the unique positive root when delta < 0."""
    f = lambda x: ((x + beta) * x + kappa) * x + delta
    hi = 1.0 + max(abs(beta), abs(kappa), abs(delta))
    return brentq(f, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)


def head_energies(params: SystemParams, gains_head, gamma: float, nu: float, tau: float) -> np.ndarray:
    """Stationary energies of the first r modes at duals (gamma, nu) and duration tau."""
    g = np.asarray(gains_head, dtype=float) / params.noise_comm_w
    if g.size == 0:
        return g
    eta = params.pa_efficiency
    b = 1.0 / eta - nu / (LN2 * params.t_max_s) * g
    if gamma == 0:
        # drop the 1/e^2 term: plain water-filling
        return np.maximum(-b * tau * eta / g, 0.0)
    a = g / eta
    d = -gamma * params.crb_coeff
    beta, kappa, delta = b * tau / a, d * g / a, d * tau / a
    e, (bb, kk, dd, s) = _largest_real_root(beta, kappa, delta)
    y = e / s
    res = np.abs(((y + bb) * y + kk) * y + dd)
    scale = np.abs(y) ** 3 + np.abs(bb * y * y) + np.abs(kk * y) + np.abs(dd)
    bad = ~(res <= 1e-12 * scale) | ~(e > 0)
    for i in np.flatnonzero(bad):
        e[i] = s[i] * _bisect_positive_root(bb[i], kk[i], dd[i])
    return e


def head_energy_cardano(params: SystemParams, channel: CommChannel, i: int, gamma: float, nu: float,
                        tau_s: float) -> float:
    """Energy of subchannel ``i`` (0-based, i < r) from the stationarity cubic."""
    if not 0 <= i < channel.rank_r:
        raise IndexError(f"subchannel {i} outside the first r={channel.rank_r}")
    return float(head_energies(params, channel.sigma[i : i + 1] ** 2, gamma, nu, tau_s)[0])


def inner_energies(params: SystemParams, channel: CommChannel, gamma: float, nu: float, tau_s: float) -> np.ndarray:
    e = np.empty(params.m_tx)
    r = channel.rank_r
    e[:r] = head_energies(params, channel.sigma**2, gamma, nu, tau_s)
    if r < params.m_tx:
        e[r:] = tail_energy(params, gamma)
    return e


# ----------------------------------------------------------------------------
# on-duration


def _snr_terms(params, gains_head, e_head, tau):
    x = gains_head / params.noise_comm_w * e_head / tau
    return x


def tau_derivative(params: SystemParams, gains_head, nu: float, e_head, tau: float) -> float:
    """dL/dtau: P_c - nu/T_max * (sum log2(1+x) + sum 1/(1+x)/ln2 - r/ln2)."""
    x = _snr_terms(params, gains_head, e_head, tau)
    f = np.sum(np.log1p(x) - x / (1 + x)) / LN2
    return params.p_nontrans_w - nu / params.t_max_s * f


@dataclass(frozen=True)
class InnerAllocation:
    e: np.ndarray
    tau_s: float
    coeffs: CubicCoefficients | None = None
    monotone: bool = True


def solve_tau(params: SystemParams, channel: CommChannel, gamma: float, nu: float) -> tuple[float, np.ndarray]:
    """Minimise the Lagrangian over tau in [T_min, T_max]; returns (tau, e)."""
    alloc = inner_allocation(params, channel, gamma, nu)
    return alloc.tau_s, alloc.e


def inner_allocation(params: SystemParams, channel: CommChannel, gamma: float, nu: float,
                     with_coeffs: bool = False) -> InnerAllocation:
    gh = channel.sigma**2
    tmin, tmax = params.t_min_s, params.t_max_s

    def lhs(tau):
        return tau_derivative(params, gh, nu, head_energies(params, gh, gamma, nu, tau), tau)

    monotone = True
    if tmin == tmax:
        tau = tmin
    else:
        lo = lhs(tmin)
        if lo > 0:
            tau = tmin
        else:
            hi = lhs(tmax)
            if hi <= 0:
                tau = tmax
                # a flat derivative (tail-dominated duals) counts as monotone
                monotone = lo <= hi + 1e-9 * (abs(lo) + abs(hi) + params.p_nontrans_w)
            else:
                tau = brentq(lhs, tmin, tmax, xtol=TAU_XTOL * tmax, rtol=4 * np.finfo(float).eps)
        if not monotone:
            log.warning("tau-derivative not monotone at gamma=%g nu=%g", gamma, nu)
    e = inner_energies(params, channel, gamma, nu, tau)
    coeffs = cubic_coefficients(params, gh, gamma, nu, tau) if with_coeffs else None
    return InnerAllocation(e=e, tau_s=float(tau), coeffs=coeffs, monotone=monotone)


# ----------------------------------------------------------------------------
# dual function


def _rate(params, gains, e, tau):
    return float(tau / params.t_max_s * np.sum(np.log1p(gains / params.noise_comm_w * e / tau)) / LN2)


def _crb(params, e):
    return float(params.crb_coeff * np.sum(1.0 / e))


def dual_value(params: SystemParams, channel: CommChannel, targets: QosTargets, gamma: float, nu: float) -> float:
    tau, e = solve_tau(params, channel, gamma, nu)
    return _lagrangian(params, channel, targets, gamma, nu, e, tau)


def _lagrangian(params, channel, targets, gamma, nu, e, tau):
    val = np.sum(e) / params.pa_efficiency + params.p_nontrans_w * tau
    if gamma > 0:
        val += gamma * (_crb(params, e) - targets.crb_max)
    val -= nu * (_rate(params, channel.gains, e, tau) - targets.rate_bps_hz)
    return float(val)


def dual_subgradient(params: SystemParams, channel: CommChannel, targets: QosTargets, gamma: float,
                     nu: float) -> np.ndarray:
    """[CRB(e*) - Gamma, R - rate(e*, tau*)] at the inner minimiser."""
    tau, e = solve_tau(params, channel, gamma, nu)
    return np.array([_crb(params, e) - targets.crb_max, targets.rate_bps_hz - _rate(params, channel.gains, e, tau)])


# ----------------------------------------------------------------------------
# ellipsoid method


@dataclass
class DualState:
    gamma: float
    nu: float
    ellipsoid_center: np.ndarray
    ellipsoid_shape: np.ndarray


@dataclass
class Diagnostics:
    iterations: int = 0
    dual_value: float = float("nan")
    primal_energy: float = float("nan")
    duality_gap: float = float("nan")
    gap_bound: float = float("inf")
    repair_factor: float = 1.0
    polished: bool = False
    converged: bool = False
    monotone_tau: bool = True
    kkt_residual_max: float = float("nan")
    scales: tuple = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "scales"}


def dual_scales(params: SystemParams, channel: CommChannel, targets: QosTargets) -> tuple[float, float]:
    """Natural magnitudes of (gamma, nu) used to centre and scale the ellipsoid.

    gamma from the tail stationarity at the sensing-only energy, nu from the
    water level meeting R over the shortest on-duration.
    """
    e_sen = params.crb_coeff * params.m_tx / targets.crb_max
    g0 = e_sen * e_sen / (params.pa_efficiency * params.crb_coeff)
    r_short = targets.rate_bps_hz * params.t_max_s / params.t_min_s
    if channel.rank_r and r_short > 0:
        _, mu = se_com_powers(params, channel, r_short)
        n0 = mu * LN2 * params.t_max_s / params.pa_efficiency
    else:
        n0 = 1.0
    return g0, n0


def ellipsoid_dual(params, channel, targets, *, max_iter=MAX_ITER, gap_rtol=GAP_RTOL, center=None):
    """Maximise the dual function over gamma > 0, nu >= 0 in scaled coordinates."""
    g0, n0 = dual_scales(params, channel, targets)
    scale = np.array([g0, n0])
    z = np.ones(2) if center is None else np.asarray(center, float) / scale
    P = np.eye(2) * ELLIPSOID_RADIUS**2
    vol0 = np.sqrt(np.linalg.det(P))
    best = (-np.inf, None)
    diag = Diagnostics(scales=(g0, n0))
    n = 2
    it = 0
    for it in range(1, max_iter + 1):
        if z[0] <= 0:
            h = np.array([-1.0, 0.0])
        elif z[1] < 0:
            h = np.array([0.0, -1.0])
        else:
            gam, nu = z * scale
            tau, e = solve_tau(params, channel, gam, nu)
            val = _lagrangian(params, channel, targets, gam, nu, e, tau)
            sg = np.array([_crb(params, e) - targets.crb_max,
                           targets.rate_bps_hz - _rate(params, channel.gains, e, tau)]) * scale
            if val > best[0]:
                best = (val, z.copy())
            gap_bound = float(np.sqrt(max(sg @ P @ sg, 0.0)))
            diag.gap_bound = min(diag.gap_bound, gap_bound)
            if gap_bound <= gap_rtol * abs(best[0]):
                diag.converged = True
                break
            h = -sg
        Ph = P @ h
        hPh = float(h @ Ph)
        if not hPh > 0:
            diag.converged = True
            break
        gt = Ph / np.sqrt(hPh)
        z = z - gt / (n + 1)
        P = n * n / (n * n - 1.0) * (P - 2.0 / (n + 1) * np.outer(gt, gt))
        P = (P + P.T) / 2
        if np.sqrt(max(np.linalg.det(P), 0.0)) < MIN_VOLUME * vol0:
            diag.converged = True
            break
    diag.iterations = it
    if best[1] is None:
        raise RuntimeError("ellipsoid never visited a dual-feasible centre")
    diag.dual_value = best[0]
    gam, nu = best[1] * scale
    return DualState(gamma=float(gam), nu=float(nu), ellipsoid_center=z * scale, ellipsoid_shape=P), diag


def _polish(params, channel, targets, gamma, nu):
    """Newton-type refinement of the duals so both constraints hold with equality."""
    gains = channel.gains

    def resid(logs):
        gam, nu_ = np.exp(logs)
        tau, e = solve_tau(params, channel, gam, nu_)
        rate = _rate(params, gains, e, tau)
        if rate <= 0:
            return np.array([np.inf, np.inf])
        # log ratios are close to linear in the log-duals (CRB ~ gamma^-1/2 on the tail)
        return np.array([np.log(_crb(params, e) / targets.crb_max), np.log(targets.rate_bps_hz / rate)])

    x0 = np.log([gamma, nu])
    r0 = np.max(np.abs(resid(x0)))
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            sol = root(resid, x0, method="hybr", options={"xtol": 1e-15})
    except (ValueError, FloatingPointError):
        return gamma, nu, False
    if np.all(np.isfinite(sol.x)) and np.max(np.abs(resid(sol.x))) < r0:
        g, n = np.exp(sol.x)
        return float(g), float(n), True
    return gamma, nu, False


def repair_primal(params: SystemParams, channel: CommChannel, targets: QosTargets, e, tau) -> tuple[np.ndarray, float]:
    """Scale all energies by the smallest factor >= 1 meeting both constraints."""
    gains = channel.gains
    s = max(1.0, _crb(params, e) / targets.crb_max)
    if targets.rate_bps_hz > 0 and _rate(params, gains, s * e, tau) < targets.rate_bps_hz:
        f = lambda k: _rate(params, gains, k * e, tau) - targets.rate_bps_hz
        hi = 2 * s
        while f(hi) < 0:
            hi *= 2
        s = brentq(f, s, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
        # brentq may land a hair below the root
        while f(s) < 0:
            s = np.nextafter(s, np.inf)
    return s * e, float(s)


def _polish_free_tau(params, channel, targets, gamma, nu, tau0):
    """Refine (gamma, nu, tau) jointly with tau interior.

    When the tail energies barely depend on tau the Lagrangian is nearly flat
    in tau, so the duals alone do not pin tau down.  Adding dL/dtau = 0 as a
    third equation keeps the system well posed.
    """
    gains, gh = channel.gains, channel.sigma**2
    tmin, tmax = params.t_min_s, params.t_max_s

    def resid(x):
        gam, nu_ = np.exp(x[:2])
        tau = x[2] * tmax
        if not tmin <= tau <= tmax:
            return np.array([np.inf] * 3)
        e = inner_energies(params, channel, gam, nu_, tau)
        rate = _rate(params, gains, e, tau)
        if rate <= 0:
            return np.array([np.inf] * 3)
        x_snr = _snr_terms(params, gh, e[: channel.rank_r], tau)
        scale = params.p_nontrans_w + nu_ / tmax * np.sum(np.log1p(x_snr) + x_snr / (1 + x_snr)) / LN2
        lhs = tau_derivative(params, gh, nu_, e[: channel.rank_r], tau)
        return np.array([np.log(_crb(params, e) / targets.crb_max), np.log(targets.rate_bps_hz / rate), lhs / scale])

    x0 = np.array([np.log(gamma), np.log(nu), tau0 / tmax])
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            sol = root(resid, x0, method="hybr", options={"xtol": 1e-15})
    except (ValueError, FloatingPointError):
        return None
    if not np.all(np.isfinite(sol.x)) or not np.all(np.isfinite(resid(sol.x))):
        return None
    g, n = np.exp(sol.x[:2])
    return float(g), float(n), float(sol.x[2] * tmax)


def _rate_matching_tau(params, channel, targets, gamma, nu):
    """tau in the open duration interval where the Lagrangian minimiser meets the rate exactly, if any."""
    tmin, tmax = params.t_min_s, params.t_max_s
    f = lambda t: _rate(params, channel.gains, inner_energies(params, channel, gamma, nu, t), t) - targets.rate_bps_hz
    a, b = f(tmin), f(tmax)
    if a < 0 < b:
        return brentq(f, tmin, tmax, xtol=TAU_XTOL * tmax)
    return None


def solve_general(params: SystemParams, channel: CommChannel, targets: QosTargets, *, max_iter=MAX_ITER,
                  polish=True) -> IsacSolution:
    """Optimal covariance and on-duration when both constraints are active.

    Candidates from the ellipsoid duals and their refinements are each made
    feasible by the minimal uniform energy scaling; the cheapest wins.
    """
    if targets.rate_bps_hz > 0 and channel.rank_r == 0:
        raise InfeasibleError("positive rate requested over a rank-0 channel")
    state, diag = ellipsoid_dual(params, channel, targets, max_iter=max_iter)
    gam0, nu0 = state.gamma, state.nu

    # (gamma, nu, tau or None for the Lagrangian minimiser, polished)
    cands = [(gam0, nu0, None, False)]
    if polish and gam0 > 0 and nu0 > 0 and targets.rate_bps_hz > 0:
        g, n, ok = _polish(params, channel, targets, gam0, nu0)
        if ok:
            cands.append((g, n, None, True))
        if params.t_min_s < params.t_max_s:
            tau0 = _rate_matching_tau(params, channel, targets, gam0, nu0)
            if tau0 is not None:
                cands.append((gam0, nu0, tau0, False))
                free = _polish_free_tau(params, channel, targets, gam0, nu0, tau0)
                if free is not None:
                    cands.append((*free, True))

    best = None
    for g, n, tau, polished in cands:
        if tau is None:
            alloc = inner_allocation(params, channel, g, n)
            tau, e_raw, monotone = alloc.tau_s, alloc.e, alloc.monotone
        else:
            e_raw, monotone = inner_energies(params, channel, g, n, tau), True
        e, factor = repair_primal(params, channel, targets, e_raw, tau)
        energy = np.sum(e) / params.pa_efficiency + params.p_nontrans_w * tau
        if best is None or energy < best[0]:
            best = (energy, g, n, tau, e, factor, polished, monotone)

    _, gam, nu, tau, e, diag.repair_factor, diag.polished, diag.monotone_tau = best
    sol = make_solution(params, channel, e / tau, channel.v, tau, Regime.GENERAL, duals=(gam, nu))
    diag.dual_value = max(diag.dual_value, dual_value(params, channel, targets, gam, nu))
    diag.primal_energy = sol.energy_j
    diag.duality_gap = sol.energy_j - diag.dual_value
    report = verify_kkt(params, channel, targets, sol, (gam, nu))
    diag.kkt_residual_max = report.max_residual
    return _with_diag(sol, diag.as_dict())


def _with_diag(sol: IsacSolution, d: dict) -> IsacSolution:
    from dataclasses import replace

    return replace(sol, diagnostics=d)


# ----------------------------------------------------------------------------
# KKT verification


@dataclass(frozen=True)
class KktReport:
    cs_crb: float
    cs_rate: float
    stationarity_head: float
    stationarity_tail: float
    stationarity_tau: float
    tau_at_bound: str | None
    crb_violation: float
    rate_violation: float

    @property
    def max_residual(self) -> float:
        return float(max(self.cs_crb, self.cs_rate, self.stationarity_head, self.stationarity_tail,
                         self.stationarity_tau, self.crb_violation, self.rate_violation))

    def ok(self, tol: float = 1e-6) -> bool:
        return self.max_residual <= tol


def verify_kkt(params: SystemParams, channel: CommChannel, targets: QosTargets, solution: IsacSolution,
               duals) -> KktReport:
    """Residuals of complementary slackness, stationarity and primal feasibility.

    Every residual is made dimensionless by the magnitude of the terms it
    balances.  When tau sits on a bound the tau-stationarity residual becomes a
    sign test of dL/dtau.
    """
    gam, nu = (float(x) for x in duals)
    r, m = channel.rank_r, params.m_tx
    tau = solution.tau_s
    e = np.asarray(solution.p, float) * tau
    eta = params.pa_efficiency
    gam_r, rate_req = targets.crb_max, targets.rate_bps_hz

    crb = params.crb_coeff * np.sum(1.0 / e) if np.all(e > 0) else np.inf
    rate = _rate(params, channel.gains, e, tau)
    crb_viol = max(0.0, crb / gam_r - 1.0)
    rate_viol = max(0.0, 1.0 - rate / rate_req) if rate_req > 0 else 0.0
    cs_crb = abs(crb - gam_r) / gam_r if gam > 0 else 0.0
    cs_rate = (abs(rate - rate_req) / rate_req if rate_req > 0 else abs(rate)) if nu > 0 else 0.0

    def stat(ei, t_gain):
        t0 = 1.0 / eta
        t2 = t_gain
        if ei <= 0:
            if gam > 0:
                return np.inf
            # e_i = 0 is optimal only if dL/de_i >= 0
            return max(0.0, -(t0 - t2)) / (t0 + t2)
        t1 = gam * params.crb_coeff / ei**2
        return abs(t0 - t1 - t2) / (t0 + t1 + t2)

    g_head = channel.sigma**2 / params.noise_comm_w
    head = [stat(e[i], nu / (LN2 * params.t_max_s) * g_head[i] / (1 + g_head[i] * e[i] / tau)) for i in range(r)]
    tail = [stat(e[i], 0.0) for i in range(r, m)]

    x = g_head * e[:r] / tau
    lhs = params.p_nontrans_w - nu / params.t_max_s * np.sum(np.log1p(x) - x / (1 + x)) / LN2
    scale = params.p_nontrans_w + nu / params.t_max_s * np.sum(np.log1p(x) + x / (1 + x)) / LN2
    scale = scale if scale > 0 else 1.0
    at = None
    if np.isclose(params.t_min_s, params.t_max_s, rtol=1e-12, atol=0):
        st_tau, at = 0.0, "both"
    elif tau <= params.t_min_s * (1 + 1e-12):
        st_tau, at = max(0.0, -lhs) / scale, "min"
    elif tau >= params.t_max_s * (1 - 1e-12):
        st_tau, at = max(0.0, lhs) / scale, "max"
    else:
        st_tau = abs(lhs) / scale
    return KktReport(
        cs_crb=float(cs_crb),
        cs_rate=float(cs_rate),
        stationarity_head=float(max(head, default=0.0)),
        stationarity_tail=float(max(tail, default=0.0)),
        stationarity_tau=float(st_tau),
        tau_at_bound=at,
        crb_violation=float(crb_viol),
        rate_violation=float(rate_viol),
    )


# ----------------------------------------------------------------------------
# full pipeline


def solve_isac(params: SystemParams, channel: CommChannel, targets: QosTargets, **kw) -> IsacSolution:
    """Regime-classified optimal solution; Infeasible is returned, not raised."""
    if params.p_nontrans_w == 0 and params.t_min_s < params.t_max_s:
        # without on-power, a longer window never hurts: pin tau to T_max
        params = params.with_(t_min_s=params.t_max_s)
    try:
        dec = classify_regime(params, channel, targets)
        if dec.solution is not None:
            return dec.solution
        return solve_general(params, channel, targets, **kw)
    except InfeasibleError as exc:
        return infeasible_solution(params, channel, str(exc))
