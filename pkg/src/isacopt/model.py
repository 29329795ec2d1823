"""System parameters, channel generation and the three performance metrics.

Units past config ingestion: seconds, Hz, linear Watts, Joules, bps/Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError

RANK_TOL = 1e-9
SINGULAR_COND = 1e12


def dbm_to_w(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def w_to_dbm(w: float) -> float:
    return 10.0 * np.log10(w) + 30.0


@dataclass(frozen=True)
class SystemParams:
    """Physical and block constants of one ISAC transmission block."""

    m_tx: int
    n_rx_sense: int
    n_rx_comm: int
    bandwidth_hz: float
    noise_comm_w: float
    noise_sense_w: float
    pa_efficiency: float
    p_nontrans_w: float
    t_min_s: float
    t_max_s: float
    p_static_w: float = 0.0

    def __post_init__(self):
        def bad(name, why):
            raise DomainError(f"{name}: {why}")

        if int(self.m_tx) != self.m_tx or self.m_tx < 1:
            bad("m_tx", "must be an integer >= 1")
        if int(self.n_rx_comm) != self.n_rx_comm or self.n_rx_comm < 1:
            bad("n_rx_comm", "must be an integer >= 1")
        if int(self.n_rx_sense) != self.n_rx_sense or self.n_rx_sense < self.m_tx:
            bad("n_rx_sense", "must be an integer >= m_tx")
        if not self.bandwidth_hz > 0:
            bad("bandwidth_hz", "must be > 0")
        if not self.noise_comm_w > 0:
            bad("noise_comm_w", "must be > 0")
        if not self.noise_sense_w >= 0:
            # zero sensing noise is only meaningful for Monte-Carlo sanity runs
            bad("noise_sense_w", "must be >= 0")
        if not 0 < self.pa_efficiency < 1:
            bad("pa_efficiency", "must lie in (0, 1)")
        if not self.p_nontrans_w >= 0:
            bad("p_nontrans_w", "must be >= 0")
        if not self.p_static_w >= 0:
            bad("p_static_w", "must be >= 0")
        if not self.t_min_s > 0:
            bad("t_min_s", "must be > 0")
        if not self.t_max_s >= self.t_min_s:
            bad("t_max_s", "must be >= t_min_s")
        if self.t_min_s * self.bandwidth_hz < 1 - 1e-9:
            bad("t_min_s", "t_min_s * bandwidth_hz must be >= 1 symbol")

    @classmethod
    def defaults(cls, **overrides) -> "SystemParams":
        """M=6, N_s=8, N_c=6, B=10 MHz, -103 dBm noise, eta=0.38, P_c=45 W, 150/256 symbols."""
        b = overrides.pop("bandwidth_hz", 10e6)
        kw = dict(
            m_tx=6,
            n_rx_sense=8,
            n_rx_comm=6,
            bandwidth_hz=b,
            noise_comm_w=dbm_to_w(-103.0),
            noise_sense_w=dbm_to_w(-103.0),
            pa_efficiency=0.38,
            p_nontrans_w=45.0,
            t_min_s=150 / b,
            t_max_s=256 / b,
        )
        kw.update(overrides)
        return cls(**kw)

    @property
    def t_min_symbols(self) -> float:
        return self.t_min_s * self.bandwidth_hz

    @property
    def t_max_symbols(self) -> float:
        return self.t_max_s * self.bandwidth_hz

    @property
    def crb_coeff(self) -> float:
        """sigma_s^2 N_s / B, the factor in front of tr(E^-1)."""
        return self.noise_sense_w * self.n_rx_sense / self.bandwidth_hz

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class QosTargets:
    rate_bps_hz: float
    crb_max: float

    def __post_init__(self):
        if not np.isfinite(self.rate_bps_hz) or self.rate_bps_hz < 0:
            raise DomainError("rate_bps_hz: must be finite and >= 0")
        if not self.crb_max > 0:
            raise DomainError("crb_max: must be > 0")


@dataclass(frozen=True)
class CommChannel:
    """Channel matrix with its SVD.

    ``sigma`` holds only the r positive singular values; ``v`` is the full
    M x M right singular basis, so columns r..M-1 span the null space.
    """

    h: np.ndarray
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    rank_r: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rank_r", int(len(self.sigma)))

    @classmethod
    def from_matrix(cls, h, rank_tol: float = RANK_TOL) -> "CommChannel":
        h = np.atleast_2d(np.asarray(h, dtype=complex))
        u, s, vh = np.linalg.svd(h, full_matrices=True)
        r = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
        return cls(h=h, u=u, sigma=s[:r].copy(), v=vh.conj().T)

    @property
    def m_tx(self) -> int:
        return self.h.shape[1]

    @property
    def gains(self) -> np.ndarray:
        """lambda_i^2 padded with zeros to length M."""
        g = np.zeros(self.m_tx)
        g[: self.rank_r] = self.sigma**2
        return g

    def reconstruct(self) -> np.ndarray:
        nc, m = self.h.shape
        s = np.zeros((nc, m))
        s[: self.rank_r, : self.rank_r] = np.diag(self.sigma)
        return self.u @ s @ self.v.conj().T


def ula_steering(n: int, angle: float) -> np.ndarray:
    """Half-wavelength uniform linear array response, unit-modulus entries."""
    return np.exp(1j * np.pi * np.arange(n) * np.sin(angle))


def pathloss_db(distance_m: float) -> float:
    return 51.2 + 41.2 * np.log10(distance_m)


def rician_components(params: SystemParams, seed: int):
    """Return (H_los, H_nlos) drawn deterministically from ``seed``.

    The draw order is fixed: AoD, AoA, then the NLoS matrix.
    """
    rng = np.random.default_rng(seed)
    theta, phi = rng.uniform(-np.pi / 2, np.pi / 2, size=2)
    nc, m = params.n_rx_comm, params.m_tx
    h_los = np.outer(ula_steering(nc, phi), ula_steering(m, theta).conj())
    h_nlos = (rng.standard_normal((nc, m)) + 1j * rng.standard_normal((nc, m))) / np.sqrt(2)
    return h_los, h_nlos


def generate_channel(params: SystemParams, distance_m: float, rician_k: float, seed: int) -> CommChannel:
    if not distance_m > 0:
        raise DomainError("distance_m: must be > 0")
    if not rician_k >= 0:
        raise DomainError("rician_k: must be >= 0")
    h_los, h_nlos = rician_components(params, seed)
    g = 10.0 ** (-pathloss_db(distance_m) / 20.0)
    h = g * (np.sqrt(rician_k / (1 + rician_k)) * h_los + np.sqrt(1 / (1 + rician_k)) * h_nlos)
    return CommChannel.from_matrix(h)


def _check_tau(params: SystemParams, tau_s: float):
    if not params.t_min_s * (1 - 1e-12) <= tau_s <= params.t_max_s * (1 + 1e-12):
        raise DomainError(f"tau_s={tau_s!r} outside [{params.t_min_s}, {params.t_max_s}]")


def _psd_eigvals(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise DomainError("covariance must be a square matrix")
    scale = max(np.abs(q).max(initial=0.0), np.finfo(float).tiny)
    if np.abs(q - q.conj().T).max(initial=0.0) > 1e-10 * scale:
        raise DomainError("covariance is not Hermitian")
    w = np.linalg.eigvalsh((q + q.conj().T) / 2)
    if w.size and w[0] < -1e-10 * max(w[-1], scale):
        raise DomainError(f"covariance is not PSD (min eigenvalue {w[0]:.3e})")
    return np.clip(w, 0.0, None)


def rate_bps_hz(params: SystemParams, channel: CommChannel, q, tau_s: float) -> float:
    """Block-averaged rate (tau/T_max) log2 det(I + H Q H^H / sigma_c^2)."""
    _psd_eigvals(q)
    _check_tau(params, tau_s)
    h = channel.h
    k = h @ np.asarray(q) @ h.conj().T / params.noise_comm_w
    w = np.clip(np.linalg.eigvalsh((k + k.conj().T) / 2), 0.0, None)
    return float(tau_s / params.t_max_s * np.sum(np.log1p(w)) / np.log(2))


def crb_trace(params: SystemParams, q, tau_s: float) -> float:
    """Sum CRB sigma_s^2 N_s / (B tau) tr(Q^-1); +inf for numerically singular Q."""
    w = _psd_eigvals(q)
    if w[-1] <= 0 or w[0] <= w[-1] / SINGULAR_COND:
        return float("inf")
    return float(params.crb_coeff / tau_s * np.sum(1.0 / w))


def energy_j(params: SystemParams, q, tau_s: float, include_static: bool = False) -> float:
    tr = float(np.real(np.trace(np.asarray(q))))
    e = 0.0 if tr <= 0 else (tr / params.pa_efficiency + params.p_nontrans_w) * tau_s
    if include_static:
        e += params.p_static_w * params.t_max_s
    return e


# Metrics on the eigenmode representation Q = V diag(p) V^H with V = channel.v.
# These avoid forming Q, whose smallest eigenvalues can sit many orders of
# magnitude below its largest at the default scale.


def rate_from_powers(params: SystemParams, channel: CommChannel, p, tau_s: float) -> float:
    p = np.asarray(p, dtype=float)
    snr = channel.gains * p / params.noise_comm_w
    return float(tau_s / params.t_max_s * np.sum(np.log1p(snr)) / np.log(2))


def crb_from_powers(params: SystemParams, p, tau_s: float) -> float:
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        return float("inf")
    return float(params.crb_coeff / tau_s * np.sum(1.0 / p))


def energy_from_powers(params: SystemParams, p, tau_s: float, include_static: bool = False) -> float:
    tr = float(np.sum(p))
    e = 0.0 if tr <= 0 else (tr / params.pa_efficiency + params.p_nontrans_w) * tau_s
    if include_static:
        e += params.p_static_w * params.t_max_s
    return e


def covariance_from_powers(v: np.ndarray, p) -> np.ndarray:
    q = (v * np.asarray(p, dtype=float)) @ v.conj().T
    return (q + q.conj().T) / 2
