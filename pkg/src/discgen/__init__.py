"""Synthetic rock-discontinuity populations and fidelity scoring."""

from .core_data import PARAMETERS, DiscontinuitySet, load_catalog, parse_csv, write_csv
from .marginal_fit import MarginalFit, fit_family, select_family
from .metrics import EvaluationConfig, evaluate
from .stat_generators import (
    MonteCarloModel,
    SmoothedBootstrapModel,
    bootstrap_generate,
    mc_generate,
)

__version__ = "0.1.0"

__all__ = [
    "PARAMETERS", "DiscontinuitySet", "load_catalog", "parse_csv", "write_csv",
    "MarginalFit", "fit_family", "select_family", "EvaluationConfig", "evaluate",
    "MonteCarloModel", "SmoothedBootstrapModel", "bootstrap_generate", "mc_generate",
]
