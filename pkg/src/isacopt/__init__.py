"""Energy-minimal transmit design for MIMO integrated sensing and communications."""

from .benchmarks import BenchmarkResult, Scheme, run_benchmarks
from .closed_form import (
    Branch,
    IsacSolution,
    Regime,
    classify_regime,
    solve_comm_dominated,
    solve_ee_com,
    solve_se_com,
    solve_sensing_dominated,
)
from .config import ExperimentConfig, load_config
from .errors import (
    ConfigError,
    DegenerateDual,
    DomainError,
    EEDegenerate,
    InfeasibleError,
    IsacError,
    NoCommChannel,
    NotApplicable,
)
from .general import solve_general, solve_isac, verify_kkt
from .model import CommChannel, QosTargets, SystemParams, crb_trace, energy_j, generate_channel, rate_bps_hz
from .oracle import make_scene, mc_validate_crb, oracle_solve

__version__ = "0.1.0"
