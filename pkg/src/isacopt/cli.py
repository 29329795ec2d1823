"""``isacopt solve|sweep|validate --config FILE`` batch runner writing CSV."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace

import numpy as np

from .benchmarks import SCHEMES as BENCH
from .closed_form import Regime
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DomainError, NotApplicable
from .general import verify_kkt, solve_isac
from .model import generate_channel
from .oracle import make_scene, mc_validate_crb

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4

VERBOSE_COLUMNS = ["iterations", "duality_gap", "kkt_residual_max"]
VALIDATE_COLUMNS = ["trials", "tau_symbols", "empirical_sum_mse", "crb_exact", "crb_trace_pred", "ratio_exact",
                    "ratio_pred", "sample_cov_dev", "rejected"]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "{:.12g}".format(float(x))
    return str(x)


def columns(m_tx: int, verbose: bool) -> list[str]:
    cols = ["sweep_axis", "sweep_value", "scheme", "feasible", "energy_j", "tau_s", "rate_bps_hz", "crb",
            "trace_q_w"]
    cols += [f"p_{i + 1}" for i in range(m_tx)]
    cols += ["regime", "gamma", "nu"]
    return cols + VERBOSE_COLUMNS if verbose else cols


def _static(cfg: ExperimentConfig, include_static: bool) -> float:
    return cfg.params.p_static_w * cfg.params.t_max_s if include_static else 0.0


def _optimal_row(cfg, channel, include_static, verbose):
    sol = solve_isac(cfg.params, channel, cfg.targets)
    feasible = sol.regime is not Regime.INFEASIBLE
    row = {"scheme": "optimal", "feasible": feasible, "regime": sol.regime.value}
    if feasible:
        row.update(energy_j=sol.energy_j + _static(cfg, include_static), tau_s=sol.tau_s,
                   rate_bps_hz=sol.rate_achieved, crb=sol.crb_achieved, trace_q_w=float(np.sum(sol.p)))
        row.update({f"p_{i + 1}": v for i, v in enumerate(sol.p)})
        if sol.duals is not None:
            row["gamma"], row["nu"] = sol.duals
        if verbose:
            d = sol.diagnostics or {}
            row["iterations"] = d.get("iterations", 0)
            row["duality_gap"] = d.get("duality_gap")
            kkt = d.get("kkt_residual_max")
            if kkt is None and sol.duals is not None:
                kkt = verify_kkt(cfg.params, channel, cfg.targets, sol, sol.duals).max_residual
            row["kkt_residual_max"] = kkt
    return row, sol


def _bench_row(name, cfg, channel, include_static):
    row = {"scheme": name, "feasible": False}
    try:
        res = BENCH[name](cfg.params, channel, cfg.targets)
    except NotApplicable:
        row["regime"] = "NotApplicable"
        return row
    row["feasible"] = res.feasible
    if res.feasible:
        row.update(energy_j=res.energy_j + _static(cfg, include_static), tau_s=res.tau_s,
                   rate_bps_hz=res.rate_achieved, crb=res.crb_achieved, trace_q_w=float(np.sum(res.p)))
        row.update({f"p_{i + 1}": v for i, v in enumerate(res.p)})
    else:
        row["regime"] = "Infeasible"
    return row


def _point_rows(cfg, axis, value, include_static, verbose):
    channel = generate_channel(cfg.params, cfg.distance_m, cfg.rician_k, cfg.seed)
    rows = []
    for name in cfg.schemes:
        if name == "optimal":
            row, _ = _optimal_row(cfg, channel, include_static, verbose)
        else:
            row = _bench_row(name, cfg, channel, include_static)
        row.update(sweep_axis=axis, sweep_value=value)
        rows.append(row)
    return rows


def render_csv(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in header])
    return buf.getvalue()


def cmd_solve(cfg: ExperimentConfig, include_static=False, verbose=False) -> tuple[int, str]:
    channel = generate_channel(cfg.params, cfg.distance_m, cfg.rician_k, cfg.seed)
    row, sol = _optimal_row(cfg, channel, include_static, verbose)
    row.update(sweep_axis="none", sweep_value=None)
    text = render_csv(columns(cfg.params.m_tx, verbose), [row])
    return (EXIT_INFEASIBLE if sol.regime is Regime.INFEASIBLE else EXIT_OK), text


def cmd_sweep(cfg: ExperimentConfig, include_static=False, verbose=False) -> tuple[int, str]:
    if cfg.sweep is None:
        raise ConfigError("sweep: sweep_axis, sweep_start, sweep_stop and sweep_points are required")
    rows = []
    for v in cfg.sweep.values():
        rows += _point_rows(cfg.at(cfg.sweep.axis, v), cfg.sweep.axis, float(v), include_static, verbose)
    return EXIT_OK, render_csv(columns(cfg.params.m_tx, verbose), rows)


def cmd_validate(cfg: ExperimentConfig, include_static=False, verbose=False) -> tuple[int, str]:
    channel = generate_channel(cfg.params, cfg.distance_m, cfg.rician_k, cfg.seed)
    sol = solve_isac(cfg.params, channel, cfg.targets)
    if sol.regime is Regime.INFEASIBLE:
        return EXIT_INFEASIBLE, ""
    if np.any(sol.p <= 0):
        print("error: optimal covariance is singular; the least-squares estimate needs full rank", file=sys.stderr)
        return EXIT_INFEASIBLE, ""
    scene = make_scene(cfg.params, cfg.scatterers, cfg.seed)
    rep = mc_validate_crb(cfg.params, scene, sol.q, sol.tau_s, trials=cfg.trials, seed=cfg.seed)
    row = {
        "trials": rep.trials, "tau_symbols": int(round(sol.tau_s * cfg.params.bandwidth_hz)),
        "empirical_sum_mse": rep.empirical_sum_mse, "crb_exact": rep.crb_exact, "crb_trace_pred": rep.crb_trace_pred,
        "ratio_exact": rep.ratio, "ratio_pred": rep.empirical_sum_mse / rep.crb_trace_pred,
        "sample_cov_dev": rep.sample_cov_dev, "rejected": rep.rejected,
    }
    return EXIT_OK, render_csv(VALIDATE_COLUMNS, [row])


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isacopt", description="Energy-minimal ISAC transmission experiments.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="key = value configuration file")
    ap.add_argument("--out", help="CSV destination (default: output_path from config, else stdout)")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--verbose", action="store_true", help="append solver diagnostics columns")
    ap.add_argument("--include-static", action="store_true", help="add p_static_w * T_max to energies")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        code, text = COMMANDS[args.command](cfg, include_static=args.include_static, verbose=args.verbose)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    out = args.out or cfg.output_path
    if text:
        if out:
            with open(out, "w", newline="") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
