"""Point-estimate graphs from path inclusion frequencies with Bayesian FDR control."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .selection import GraphEstimate, SelectionPath, estimate_precision

__all__ = ["InclusionMatrix", "inclusion_matrix", "FdrResult", "fdr_threshold", "point_estimate"]


@dataclass
class InclusionMatrix:
    p_mat: np.ndarray
    grid_size: int


def inclusion_matrix(path: SelectionPath, rule: str | None = None) -> InclusionMatrix:
    """Fraction of grid penalties at which each edge is present."""
    adj = path.adjacencies(rule)
    if adj.shape[0] == 0:
        raise ValueError("empty selection path")
    pm = adj.mean(axis=0)
    np.fill_diagonal(pm, 0.0)
    return InclusionMatrix(pm, adj.shape[0])


@dataclass
class FdrResult:
    threshold: float
    count: int
    eta: float
    mode: str


def _sorted_upper(p_mat: np.ndarray) -> np.ndarray:
    i, j = np.triu_indices(p_mat.shape[0], 1)
    vals = p_mat[i, j]
    # stable sort on the negated values keeps row-major order among ties
    return vals[np.argsort(-vals, kind="stable")]


def fdr_threshold(p_mat, eta: float, mode: str = "complement") -> FdrResult:
    """Largest prefix of the sorted inclusion frequencies meeting the FDR bound.

    With ``P`` sorted in decreasing order, ``zeta`` is the largest ``j`` for
    which the mean of ``1 - P[:j]`` (``mode="complement"``) or of ``P[:j]``
    (``mode="printed"``) is at most ``eta``. The threshold is ``P[zeta - 1]``;
    when no prefix qualifies it is ``inf`` and nothing is selected.

    Parameters
    ----------
    p_mat : InclusionMatrix or array
        Symmetric matrix of inclusion frequencies.
    eta : float
        Target average false discovery rate in (0, 1).
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    if mode not in ("complement", "printed"):
        raise ValueError("mode must be 'complement' or 'printed'")
    pm = np.asarray(getattr(p_mat, "p_mat", p_mat), dtype=float)
    if pm.shape[0] < 2:
        raise ValueError("need at least one off-diagonal entry")
    vals = _sorted_upper(pm)
    q = 1.0 - vals if mode == "complement" else vals
    running = np.cumsum(q) / np.arange(1, q.size + 1)
    ok = np.flatnonzero(running <= eta + 1e-12)
    if ok.size == 0:
        return FdrResult(np.inf, 0, eta, mode)
    zeta = int(ok[-1]) + 1
    return FdrResult(float(vals[zeta - 1]), zeta, eta, mode)


def point_estimate(p_mat, c_eta: float, omega_mean) -> GraphEstimate:
    """Graph of edges with inclusion frequency at least ``c_eta``."""
    pm = np.asarray(getattr(p_mat, "p_mat", p_mat), dtype=float)
    adj = pm >= c_eta
    np.fill_diagonal(adj, False)
    return estimate_precision(omega_mean, adj)
