"""Moreau-Yosida approximation of spike-and-slab posteriors for linear regression."""
from .diagnostics import TruthSpec, relative_error, sen_prec_f
from .estimators import LassoFISTA, MoreauSpikeSlabRegressor
from .linmodel import Dataset, HyperState, gamma_from_rule, lambda_max
from .prox import MCP, ElasticNet, GenDoublePareto, Laplace
from .sampler import ApproxPosterior, ChainState, SamplerConfig, initial_state, run_chain

__version__ = "0.1.0"

__all__ = [
    "ApproxPosterior",
    "ChainState",
    "Dataset",
    "ElasticNet",
    "GenDoublePareto",
    "HyperState",
    "Laplace",
    "LassoFISTA",
    "MCP",
    "MoreauSpikeSlabRegressor",
    "SamplerConfig",
    "TruthSpec",
    "gamma_from_rule",
    "initial_state",
    "lambda_max",
    "relative_error",
    "run_chain",
    "sen_prec_f",
]
