"""Fixed-confidence identification of the arm with the smallest Entropic Value-at-Risk."""

from .evar import EvarResult, boundary_regime, evar
from .klinf import kl_inf_lower, kl_inf_upper, klinf_value
from .measures import DiscreteDistribution, RiskLevel, esscher_tilt, kl_divergence, log_mgf
from .oracle import (
    DegenerateInstanceError,
    OracleSolution,
    characteristic_time,
    pairwise_g,
    sample_complexity_lower_bound,
)
from .sim import BanditInstance, monte_carlo, delta_sweep
from .tas import TrackAndStopState, glrt_statistic, threshold

__all__ = [
    "BanditInstance", "DegenerateInstanceError", "DiscreteDistribution", "EvarResult",
    "OracleSolution", "RiskLevel", "TrackAndStopState", "boundary_regime",
    "characteristic_time", "delta_sweep", "esscher_tilt", "evar", "glrt_statistic",
    "kl_divergence", "kl_inf_lower", "kl_inf_upper", "klinf_value", "log_mgf",
    "monte_carlo", "pairwise_g", "sample_complexity_lower_bound", "threshold",
]

__version__ = "0.1.0"
