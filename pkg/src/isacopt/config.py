"""Flat ``key = value`` experiment configuration.

Lines starting with ``#`` (and trailing ``# ...``) are comments.  Any key left
out takes the default listed in ``DEFAULTS``.  Noise powers may be given in
dBm (``noise_comm_dbm``) or Watts (``noise_comm_w``) but not both.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .model import QosTargets, SystemParams, dbm_to_w

SCHEME_NAMES = ("optimal", "isotropic", "comm_based", "sensing_based", "always_on")
SWEEP_AXES = ("crb", "rate", "distance")

DEFAULTS = {
    "m_tx": 6,
    "n_rx_sense": 8,
    "n_rx_comm": 6,
    "bandwidth_hz": 10e6,
    "noise_comm_dbm": -103.0,
    "noise_sense_dbm": -103.0,
    "pa_efficiency": 0.38,
    "p_nontrans_w": 45.0,
    "t_min_symbols": 150,
    "t_max_symbols": 256,
    "p_static_w": 0.0,
    "distance_m": 100.0,
    "rician_k": 1.0,
    "seed": 0,
    "rate_bps_hz": 18.0,
    "crb_max": 0.25,
    "schemes": "optimal",
    "trials": 10_000,
    "scatterers": 3,
}

_INT_KEYS = {"m_tx", "n_rx_sense", "n_rx_comm", "seed", "sweep_points", "trials", "scatterers"}
_STR_KEYS = {"schemes", "sweep_axis", "sweep_scale", "output_path"}
_FLOAT_KEYS = {
    "bandwidth_hz", "noise_comm_dbm", "noise_comm_w", "noise_sense_dbm", "noise_sense_w", "pa_efficiency",
    "p_nontrans_w", "t_min_symbols", "t_max_symbols", "t_min_s", "t_max_s", "p_static_w", "distance_m",
    "rician_k", "rate_bps_hz", "crb_max", "sweep_start", "sweep_stop",
}
KNOWN_KEYS = _INT_KEYS | _STR_KEYS | _FLOAT_KEYS


@dataclass(frozen=True)
class Sweep:
    axis: str
    start: float
    stop: float
    points: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class ExperimentConfig:
    params: SystemParams
    distance_m: float
    rician_k: float
    seed: int
    rate_bps_hz: float
    crb_max: float
    schemes: tuple[str, ...] = ("optimal",)
    sweep: Sweep | None = None
    trials: int = 10_000
    scatterers: int = 3
    output_path: str | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def targets(self) -> QosTargets:
        return QosTargets(self.rate_bps_hz, self.crb_max)

    def at(self, axis: str, value: float) -> "ExperimentConfig":
        """Copy with one swept quantity replaced."""
        from dataclasses import replace

        key = {"crb": "crb_max", "rate": "rate_bps_hz", "distance": "distance_m"}[axis]
        return replace(self, **{key: float(value)})


def parse_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _convert(key: str, value: str):
    try:
        if key in _INT_KEYS:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r}") from None
    return value


def _pick(raw: dict, key_a: str, key_b: str, conv_b=lambda x: x):
    """Value from whichever of two alternative keys is present; both is an error."""
    if key_a in raw and key_b in raw:
        raise ConfigError(f"{key_a} and {key_b} are mutually exclusive")
    if key_b in raw:
        return conv_b(raw[key_b])
    return raw.get(key_a)


def from_dict(values: dict) -> ExperimentConfig:
    user = {k: _convert(k, str(v)) if isinstance(v, str) else v for k, v in values.items()}
    unknown = set(user) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")
    raw = dict(DEFAULTS)
    # a user-supplied alternative unit replaces the default of its twin
    for a, b in (("noise_comm_dbm", "noise_comm_w"), ("noise_sense_dbm", "noise_sense_w"),
                 ("t_min_symbols", "t_min_s"), ("t_max_symbols", "t_max_s")):
        if b in user:
            raw.pop(a, None)
    raw.update(user)

    b = raw["bandwidth_hz"]
    noise_c = _pick(raw, "noise_comm_w", "noise_comm_dbm", dbm_to_w)
    noise_s = _pick(raw, "noise_sense_w", "noise_sense_dbm", dbm_to_w)
    t_min = _pick(raw, "t_min_s", "t_min_symbols", lambda n: n / b)
    t_max = _pick(raw, "t_max_s", "t_max_symbols", lambda n: n / b)
    try:
        params = SystemParams(
            m_tx=raw["m_tx"], n_rx_sense=raw["n_rx_sense"], n_rx_comm=raw["n_rx_comm"], bandwidth_hz=b,
            noise_comm_w=noise_c, noise_sense_w=noise_s, pa_efficiency=raw["pa_efficiency"],
            p_nontrans_w=raw["p_nontrans_w"], t_min_s=t_min, t_max_s=t_max, p_static_w=raw["p_static_w"],
        )
        QosTargets(raw["rate_bps_hz"], raw["crb_max"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None

    if not raw["distance_m"] > 0:
        raise ConfigError("distance_m: must be > 0")
    if not raw["rician_k"] >= 0:
        raise ConfigError("rician_k: must be >= 0")
    if raw["trials"] < 1:
        raise ConfigError("trials: must be >= 1")
    if raw["scatterers"] < 1:
        raise ConfigError("scatterers: must be >= 1")

    schemes = tuple(s.strip() for s in str(raw["schemes"]).split(",") if s.strip())
    if not schemes:
        raise ConfigError("schemes: must not be empty")
    bad = [s for s in schemes if s not in SCHEME_NAMES]
    if bad:
        raise ConfigError(f"schemes: unknown scheme(s) {', '.join(bad)}")

    sweep = None
    sweep_keys = {"sweep_axis", "sweep_start", "sweep_stop", "sweep_points", "sweep_scale"}
    if sweep_keys & set(raw):
        missing = {"sweep_axis", "sweep_start", "sweep_stop", "sweep_points"} - set(raw)
        if missing:
            raise ConfigError(f"incomplete sweep, missing {', '.join(sorted(missing))}")
        axis, scale = raw["sweep_axis"], raw.get("sweep_scale", "linear")
        if axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis: must be one of {', '.join(SWEEP_AXES)}")
        if scale not in ("linear", "log"):
            raise ConfigError("sweep_scale: must be linear or log")
        if raw["sweep_points"] < 2:
            raise ConfigError("sweep_points: must be >= 2")
        lo, hi = raw["sweep_start"], raw["sweep_stop"]
        if axis == "rate":
            ok = lo >= 0 and hi >= 0 and (scale == "linear" or lo > 0)
        else:
            ok = lo > 0 and hi > 0
        if not ok:
            raise ConfigError("sweep_start/sweep_stop: sweep range must be positive")
        sweep = Sweep(axis, lo, hi, raw["sweep_points"], scale)

    return ExperimentConfig(
        params=params, distance_m=raw["distance_m"], rician_k=raw["rician_k"], seed=raw["seed"],
        rate_bps_hz=raw["rate_bps_hz"], crb_max=raw["crb_max"], schemes=schemes, sweep=sweep,
        trials=raw["trials"], scatterers=raw["scatterers"], output_path=raw.get("output_path"), raw=raw,
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return from_dict(parse_text(text))
