"""Gaussian graphical models under a regularized inverse-Wishart prior.

Gibbs sampling of whole precision matrices, neighbourhood selection through
penalized credible regions, FDR point estimates and a simulation harness.
"""
from .core import DecompositionError, RngStream, cholesky_lower, sample_gig, sample_wishart_std, spd_inverse
from .fdr import fdr_threshold, inclusion_matrix, point_estimate
from .sampler import (
    ChainSamples,
    DUpdate,
    Hyperparameters,
    LambdaUpdate,
    Prior,
    default_hyperparameters,
    run_chain,
    standardize,
)
from .selection import build_path, estimate_precision, node_posterior, solve_credible_path

__version__ = "0.1.0"

__all__ = [
    "DecompositionError",
    "RngStream",
    "cholesky_lower",
    "spd_inverse",
    "sample_wishart_std",
    "sample_gig",
    "Prior",
    "DUpdate",
    "LambdaUpdate",
    "Hyperparameters",
    "ChainSamples",
    "standardize",
    "default_hyperparameters",
    "run_chain",
    "node_posterior",
    "solve_credible_path",
    "build_path",
    "estimate_precision",
    "inclusion_matrix",
    "fdr_threshold",
    "point_estimate",
]
