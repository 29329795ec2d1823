"""Independent reference solver and Monte-Carlo CRB validator.

Nothing here calls into the general solver or the closed forms; only the
metric definitions in :mod:`isacopt.model` are shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import DomainError, InfeasibleError
from .model import CommChannel, QosTargets, SystemParams, ula_steering

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class OracleResult:
    energy_j: float
    e: np.ndarray
    tau_s: float
    dual_bound: float


def _stationary_energies(gam, nu, gains, tau, eta, c, tmax, iters=44):
    """Solve 1/eta - gam c / e^2 - nu/(ln2 T_max) g/(1 + g e/tau) = 0 for e, elementwise.

    The left side increases in e, so geometric bisection between a lower
    bound (where the CRB term alone balances 1/eta) and an upper bound (where
    each subtracted term is at most 1/(2 eta)) converges without derivatives.
    """
    gam, nu, gains = np.broadcast_arrays(gam, nu, gains)
    w = nu / (_LN2 * tmax)
    lo = np.sqrt(eta * gam * c)
    hi = np.maximum(np.sqrt(2 * eta * gam * c), 2 * eta * w * tau) * (1 + 1e-12)
    lo = np.minimum(lo, hi)
    for _ in range(iters):
        mid = np.sqrt(lo * hi)
        f = 1 / eta - gam * c / mid**2 - w * gains / (1 + gains * mid / tau)
        neg = f < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return np.sqrt(lo * hi)


class _FixedTau:
    """Fixed-duration subproblem: min sum e / eta s.t. CRB and rate at this tau."""

    def __init__(self, params, channel, targets):
        self.eta = params.pa_efficiency
        self.c = params.crb_coeff
        self.tmax = params.t_max_s
        self.pc = params.p_nontrans_w
        self.gamma_cap = targets.crb_max
        self.rate = targets.rate_bps_hz
        m, r = params.m_tx, channel.rank_r
        g = np.zeros(m)
        s = np.linalg.svd(channel.h, compute_uv=False)
        g[:r] = s[:r] ** 2 / params.noise_comm_w
        self.g = g
        self.m = m

    def energies(self, gam, nu, tau):
        g = self.g
        return _stationary_energies(gam[..., None], nu[..., None], g, tau, self.eta, self.c, self.tmax)

    def rate_of(self, e, tau):
        return tau / self.tmax * np.sum(np.log1p(self.g * e / tau), axis=-1) / _LN2

    def crb_of(self, e):
        return self.c * np.sum(1.0 / e, axis=-1)

    def dual(self, gam, nu, tau):
        e = self.energies(gam, nu, tau)
        val = (np.sum(e, axis=-1) / self.eta + gam * (self.crb_of(e) - self.gamma_cap)
               - nu * (self.rate_of(e, tau) - self.rate) + self.pc * tau)
        return val, e

    def polish(self, e0, tau):
        """Local SLSQP on the convex fixed-tau primal in log coordinates around ``e0``."""
        e0 = np.asarray(e0, float)
        scale = float(np.sum(e0))
        cons = [{"type": "ineq", "fun": lambda x: 1.0 - self.crb_of(e0 * np.exp(x)) / self.gamma_cap}]
        if self.rate > 0:
            cons.append({"type": "ineq", "fun": lambda x: self.rate_of(e0 * np.exp(x), tau) / self.rate - 1.0})
        with np.errstate(over="ignore", invalid="ignore"):
            res = minimize(lambda x: float(np.sum(e0 * np.exp(x))) / scale, np.zeros(len(e0)), method="SLSQP",
                           constraints=cons, options={"ftol": 1e-15, "maxiter": 200})
        if not np.all(np.isfinite(res.x)):
            return e0
        return e0 * np.exp(res.x)

    def repair(self, e, tau):
        """Uniform scaling for the rate, then raise the weakest energies to a common floor for the CRB.

        The floor step is the cheapest way to restore the CRB once the rate
        holds, so an imprecise gamma on a flat dual costs almost nothing.
        """
        e = np.asarray(e, float).copy()
        if self.rate > 0 and self.rate_of(e, tau) < self.rate:
            f = lambda s: self.rate_of(s * e, tau) - self.rate
            hi = 2.0
            while f(hi) < 0:
                hi *= 2
            s = brentq(f, 1.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
            while f(s) < 0:
                s = np.nextafter(s, np.inf)
            e *= s
        if self.crb_of(e) > self.gamma_cap:
            g = lambda t: self.crb_of(np.maximum(e, t)) - self.gamma_cap
            lo, hi = 0.0, self.c * self.m / self.gamma_cap
            while g(hi) > 0:
                hi *= 1 + 1e-12
            t = brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
            while g(t) > 0:
                t = np.nextafter(t, np.inf)
            e = np.maximum(e, t)
        return e


def _grid_axes(center, half_width, density):
    return np.exp(np.linspace(math.log(center) - half_width, math.log(center) + half_width, density))


def _fixed_tau_solve(sub: _FixedTau, tau, g_scale, n_scale, density, refinements, refine_density):
    """Best dual point at this tau from a wide grid plus local refinements, then a repaired primal.

    Each refinement spans +-2 cells of the previous grid.  The primal read off
    the grid point is made feasible, polished locally and made feasible again.
    """
    hw_g, hw_n = math.log(1e5), math.log(1e4)
    cg, cn = g_scale * 1e-3, n_scale
    best = (-np.inf, None, None)
    n = density
    for _ in range(refinements + 1):
        gs = _grid_axes(cg, hw_g, n)
        ns = _grid_axes(cn, hw_n, n) if sub.rate > 0 else np.zeros(1)
        G, N = np.meshgrid(gs, ns, indexing="ij")
        val, _ = sub.dual(G, N, tau)
        k = np.unravel_index(int(np.argmax(val)), val.shape)
        if val[k] > best[0]:
            best = (float(val[k]), float(G[k]), float(N[k]))
        cg, cn = best[1], max(best[2], 1e-300)
        hw_g *= 4.0 / (n - 1)
        hw_n *= 4.0 / (n - 1)
        n = refine_density
    _, gam, nu = best
    e = sub.repair(sub.energies(np.array(gam), np.array(nu), tau), tau)
    e = sub.repair(sub.polish(e, tau), tau)
    energy = float(np.sum(e) / sub.eta + sub.pc * tau)
    return energy, e, best[0]


def oracle_solve(params: SystemParams, channel: CommChannel, targets: QosTargets, grid_density: int = 200,
                 refinements: int = 2, refine_density: int = 41, tau_grid: int = 5) -> OracleResult:
    """Brute-force reference optimum for small M.

    Outer: a tau grid followed by bounded scalar minimisation around the best
    grid point.  Inner: the dual of the fixed-tau problem maximised over a
    log-spaced (gamma, nu) grid, then refined on smaller local grids.
    """
    if targets.rate_bps_hz > 0 and channel.rank_r == 0:
        raise InfeasibleError("positive rate requested over a rank-0 channel")
    sub = _FixedTau(params, channel, targets)
    eta, c = params.pa_efficiency, params.crb_coeff
    e_sen = c * params.m_tx / targets.crb_max
    g_scale = e_sen**2 / (eta * c)
    # nu scale from a crude equal-split power meeting R at T_min
    if targets.rate_bps_hz > 0:
        r = channel.rank_r
        gsum = sub.g[:r]
        p_eq = np.expm1(targets.rate_bps_hz * params.t_max_s / params.t_min_s * _LN2 / r) / gsum.min()
        n_scale = (p_eq + 1 / gsum.min()) * _LN2 * params.t_max_s / eta
    else:
        n_scale = 1.0

    cache = {}

    def value(tau):
        tau = float(min(max(tau, params.t_min_s), params.t_max_s))
        if tau not in cache:
            cache[tau] = _fixed_tau_solve(sub, tau, g_scale, n_scale, grid_density, refinements, refine_density)
        return cache[tau][0]

    tmin, tmax = params.t_min_s, params.t_max_s
    if tmax > tmin:
        taus = np.linspace(tmin, tmax, tau_grid)
        vals = [value(t) for t in taus]
        k = int(np.argmin(vals))
        lo, hi = taus[max(k - 1, 0)], taus[min(k + 1, tau_grid - 1)]
        minimize_scalar(value, bounds=(lo, hi), method="bounded", options={"xatol": 1e-4 * tmax, "maxiter": 30})
    else:
        value(tmin)
    tau = min(cache, key=lambda t: cache[t][0])
    energy, e, bound = cache[tau]
    return OracleResult(energy_j=energy, e=np.asarray(e), tau_s=tau, dual_bound=bound)


# ----------------------------------------------------------------------------
# Monte-Carlo CRB validation


@dataclass(frozen=True)
class SensingScene:
    zeta: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    h_s: np.ndarray

    @property
    def k_count(self) -> int:
        return len(self.zeta)


def scene_from(params: SystemParams, zeta, theta, phi) -> SensingScene:
    zeta, theta, phi = (np.atleast_1d(np.asarray(x)) for x in (zeta, theta, phi))
    h = np.zeros((params.n_rx_sense, params.m_tx), complex)
    for z, t, f in zip(zeta, theta, phi):
        h += z * np.outer(ula_steering(params.n_rx_sense, f), ula_steering(params.m_tx, t).conj())
    return SensingScene(zeta=zeta.astype(complex), theta=theta.astype(float), phi=phi.astype(float), h_s=h)


def make_scene(params: SystemParams, k_count: int, seed: int) -> SensingScene:
    if k_count < 1:
        raise DomainError("k_count must be >= 1")
    rng = np.random.default_rng(seed)
    zeta = (rng.standard_normal(k_count) + 1j * rng.standard_normal(k_count)) / np.sqrt(2)
    theta = rng.uniform(-np.pi / 2, np.pi / 2, k_count)
    phi = rng.uniform(-np.pi / 2, np.pi / 2, k_count)
    return scene_from(params, zeta, theta, phi)


@dataclass(frozen=True)
class McReport:
    trials: int
    empirical_sum_mse: float
    crb_exact: float
    crb_trace_pred: float
    sample_cov_dev: float
    rejected: int
    mean_estimate: np.ndarray
    std_error: np.ndarray

    @property
    def ratio(self) -> float:
        return self.empirical_sum_mse / self.crb_exact if self.crb_exact > 0 else float("nan")


def _cscg(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def mc_validate_crb(params: SystemParams, scene: SensingScene, q, tau_s: float, trials: int = 10_000,
                    seed: int = 0, batch: int = 500) -> McReport:
    """Least-squares estimation of H_s over noise trials with one transmit block X.

    ``crb_exact`` is sigma_s^2 N_s tr((X X^H)^-1) for the drawn X;
    ``crb_trace_pred`` replaces X X^H by tau_hat Q.
    """
    q = np.asarray(q)
    m, ns = params.m_tx, params.n_rx_sense
    n_sym = int(round(tau_s * params.bandwidth_hz))
    if n_sym < m:
        raise DomainError(f"need at least M={m} symbols, got {n_sym}")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    w, vecs = np.linalg.eigh((q + q.conj().T) / 2)
    if w[0] <= 0:
        raise DomainError("covariance must be full rank")
    root_q = (vecs * np.sqrt(w)) @ vecs.conj().T

    ss = np.random.SeedSequence(seed)
    x_seq, noise_seq = ss.spawn(2)
    xrng = np.random.default_rng(x_seq)
    rejected = 0
    while True:
        x = root_q @ _cscg(xrng, (m, n_sym))
        gram = x @ x.conj().T
        if np.linalg.cond(gram) < 1e12:
            break
        rejected += 1
    gram_inv = np.linalg.inv(gram)
    proj = x.conj().T @ gram_inv  # tau_hat x M

    sigma = np.sqrt(params.noise_sense_w)
    h = scene.h_s
    sq_errs, sums, sums_sq = [], np.zeros_like(h), np.zeros(h.shape)
    n_batches = -(-trials // batch)
    for k, child in enumerate(noise_seq.spawn(n_batches)):
        nb = min(batch, trials - k * batch)
        rng = np.random.default_rng(child)
        z = sigma * _cscg(rng, (nb, ns, n_sym))
        err = z @ proj  # H_hat - H for each trial
        sq_errs.append(math.fsum(np.sum(np.abs(err) ** 2, axis=(1, 2))))
        est = h + err
        sums += est.sum(axis=0)
        sums_sq += (np.abs(est - h) ** 2).sum(axis=0)
    mse = math.fsum(sq_errs) / trials
    mean_est = sums / trials
    var = np.maximum(sums_sq / trials - np.abs(mean_est - h) ** 2, 0.0)
    std_err = np.sqrt(var / trials)

    crb_exact = params.noise_sense_w * ns * float(np.real(np.trace(gram_inv)))
    crb_pred = params.noise_sense_w * ns / (params.bandwidth_hz * tau_s) * float(np.real(np.trace(np.linalg.inv(q))))
    dev = float(np.linalg.norm(gram / n_sym - q) / np.linalg.norm(q))
    return McReport(trials=trials, empirical_sum_mse=mse, crb_exact=crb_exact, crb_trace_pred=crb_pred,
                    sample_cov_dev=dev, rejected=rejected, mean_estimate=mean_est, std_error=std_err)
