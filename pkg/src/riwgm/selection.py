"""Post-MCMC neighbourhood selection with penalized credible regions.

For node k the posterior mean ``beta_hat`` and covariance ``Sigma_hat`` of the
regression coefficients define the adaptive-lasso type problem

    min_beta (beta - beta_hat)' Sigma_hat^-1 (beta - beta_hat)
             + delta * sum_j |beta_j| / beta_hat_j^2.

With ``gamma_j = beta_j / beta_hat_j^2`` it becomes a plain lasso in Gram form,
whose whole path is computed once by homotopy and read off on a grid of
penalties shared by all nodes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import spd_inverse
from .homotopy import LassoPath, lasso_path_gram
from .sampler import ChainSamples

__all__ = [
    "extract_betas",
    "NodePosterior",
    "node_posterior",
    "NodePath",
    "credible_path",
    "solve_credible_path",
    "DeltaGrid",
    "auto_grid",
    "combine_edges",
    "GraphEstimate",
    "estimate_precision",
    "SelectionPath",
    "build_path",
]

RIDGE_EPS = 1e-8
MAX_CONDITION = 1e12


def extract_betas(omega, k: int) -> np.ndarray:
    """Regression coefficients of node k on the others, ``-omega[k, j] / omega[k, k]``."""
    omega = np.asarray(omega, dtype=float)
    return np.delete(-omega[k] / omega[k, k], k)


@dataclass
class NodePosterior:
    node: int
    beta_hat: np.ndarray
    sigma_hat: np.ndarray
    ridge_applied: float = 0.0


def _ridge(sigma: np.ndarray) -> tuple[np.ndarray, float]:
    m = sigma.shape[0]
    if m == 0:
        return sigma, 0.0
    ev = np.linalg.eigvalsh(sigma)
    if ev[0] > 0 and ev[-1] / ev[0] <= MAX_CONDITION:
        return sigma, 0.0
    tr = float(np.trace(sigma))
    # a constant chain has zero trace; fall back to a unit scale
    ridge = RIDGE_EPS * (tr / m if tr > 0 else 1.0)
    out = sigma + ridge * np.eye(m)
    ev = np.linalg.eigvalsh(out)
    # the relative ridge alone cannot always reach the condition bound
    while ev[0] <= 0 or ev[-1] / ev[0] > MAX_CONDITION:
        extra = max(ev[-1] / MAX_CONDITION - ev[0], ridge) * 1.01
        out = out + extra * np.eye(m)
        ridge += extra
        ev = np.linalg.eigvalsh(out)
    return out, ridge


def node_posterior(samples: ChainSamples, k: int) -> NodePosterior:
    """Posterior mean and covariance of node k's coefficients.

    A ridge ``1e-8 * tr(Sigma_hat) / (p - 1)`` is added when the covariance is
    singular or its condition number exceeds 1e12.
    """
    p = samples.p
    if samples.count < p:
        raise ValueError(
            f"node {k}: {samples.count} draws but p = {p}; the coefficient covariance would be rank deficient"
        )
    beta = samples.beta_hat(k)
    sigma = samples.beta_cov(k)
    sigma = 0.5 * (sigma + sigma.T)
    sigma, ridge = _ridge(sigma)
    return NodePosterior(k, beta, sigma, ridge)


@dataclass
class NodePath:
    """Exact credible-region path of one node.

    ``usable`` marks coefficients with nonzero posterior mean; the others carry
    an infinite weight and never enter. ``path`` is over the usable ones.
    """

    node: int
    beta_hat: np.ndarray
    usable: np.ndarray
    path: LassoPath

    @property
    def terminal(self) -> float:
        return self.path.terminal

    def support_at(self, delta: float) -> np.ndarray:
        out = np.zeros(self.beta_hat.size, dtype=bool)
        out[self.usable] = self.path.support_at(delta)
        return out

    def beta_at(self, delta: float) -> np.ndarray:
        out = np.zeros(self.beta_hat.size)
        w = self.beta_hat[self.usable] ** 2
        out[self.usable] = w * self.path.coef_at(delta)
        return out


def credible_path(post: NodePosterior) -> NodePath:
    """Homotopy path of the credible-region problem for one node."""
    beta = np.asarray(post.beta_hat, dtype=float)
    usable = beta != 0
    sub = post.sigma_hat[np.ix_(usable, usable)]
    if sub.size:
        try:
            prec = spd_inverse(sub)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"node {post.node}: coefficient covariance is singular") from exc
    else:
        prec = sub
    bu = beta[usable]
    w = bu * bu
    gram = w[:, None] * prec * w[None, :]
    corr = w * (prec @ bu)
    return NodePath(post.node, beta, usable, lasso_path_gram(gram, corr))


@dataclass
class DeltaGrid:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("grid must be a non-empty vector")
        if np.any(v < 0) or np.any(np.diff(v) <= 0):
            raise ValueError("grid values must be non-negative and strictly increasing")
        self.values = v

    @property
    def size(self) -> int:
        return self.values.size


def auto_grid(paths: list[NodePath], count: int = 50) -> DeltaGrid:
    """Shared penalty grid: 0 followed by ``count - 1`` log-spaced points.

    The top point is 1.05 times the largest terminal knot, where every node
    has an empty neighbourhood. The smallest positive point is the largest
    penalty at which some node still keeps its full neighbourhood, and at 0
    every node is full, so the grid runs from full to empty for all nodes.
    """
    if count < 2:
        raise ValueError("grid needs at least two points")
    terms = [p.terminal for p in paths if p.usable.any()]
    hi = 1.05 * max(terms) if terms else 1.0
    if hi <= 0:
        hi = 1.0
    fulls = [p.path.full_knot for p in paths if p.usable.any()]
    lo = max(fulls) if fulls else 0.0
    if not 0 < lo < hi:
        lo = hi * 1e-6
    return DeltaGrid(np.concatenate([[0.0], np.geomspace(lo, hi, count - 1)]))


def solve_credible_path(post: NodePosterior, grid: DeltaGrid) -> np.ndarray:
    """Supports (boolean, ``grid.size x (p-1)``) at each grid penalty."""
    path = credible_path(post)
    return np.array([path.support_at(d) for d in grid.values])


def combine_edges(neighborhoods: np.ndarray, rule: str = "and") -> np.ndarray:
    """Symmetric adjacency from node-wise selections.

    ``neighborhoods[k, j]`` says node k selected j. ``"and"`` keeps an edge
    when both ends select each other, ``"or"`` when either does.
    """
    ne = np.asarray(neighborhoods, dtype=bool)
    if rule == "and":
        adj = ne & ne.T
    elif rule == "or":
        adj = ne | ne.T
    else:
        raise ValueError("rule must be 'and' or 'or'")
    adj = adj.copy()
    np.fill_diagonal(adj, False)
    return adj


def _expand(support: np.ndarray, k: int) -> np.ndarray:
    return np.insert(support, k, False)


@dataclass
class GraphEstimate:
    adjacency: np.ndarray
    edges: list
    omega_est: np.ndarray
    min_eigenvalue: float


def estimate_precision(omega_mean, adjacency) -> GraphEstimate:
    """Mask the posterior mean precision by the graph, keeping the diagonal."""
    om = np.asarray(omega_mean, dtype=float)
    adj = np.asarray(adjacency, dtype=bool)
    if om.shape != adj.shape or om.ndim != 2 or om.shape[0] != om.shape[1]:
        raise ValueError(f"shape mismatch: omega {om.shape}, adjacency {adj.shape}")
    adj = (adj | adj.T).copy()
    np.fill_diagonal(adj, False)
    mask = adj | np.eye(om.shape[0], dtype=bool)
    est = np.where(mask, om, 0.0)
    mineig = float(np.linalg.eigvalsh(est)[0]) if est.size else 0.0
    if mineig <= 0:
        warnings.warn(f"masked precision estimate is not positive definite (min eigenvalue {mineig:.3g})")
    i, j = np.nonzero(np.triu(adj, 1))
    return GraphEstimate(adj, list(zip(i.tolist(), j.tolist())), est, mineig)


@dataclass
class SelectionPath:
    """Graphs along a penalty grid.

    ``supports[m, k, j]`` says node k selects j at ``grid.values[m]`` (full
    p x p layout, false on the diagonal). Per-node supports are made nested:
    a variable counts as selected at a penalty if it is on the exact path at
    that penalty or at any larger grid penalty.
    """

    grid: DeltaGrid
    supports: np.ndarray
    rule: str = "and"
    terminals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def p(self) -> int:
        return self.supports.shape[1]

    def adjacency_at(self, m: int, rule: str | None = None) -> np.ndarray:
        return combine_edges(self.supports[m], rule or self.rule)

    def adjacencies(self, rule: str | None = None) -> np.ndarray:
        return np.array([self.adjacency_at(m, rule) for m in range(self.grid.size)])


def build_path(
    samples: ChainSamples,
    grid: DeltaGrid | None = None,
    rule: str = "and",
    delta_count: int = 50,
    nested: bool = True,
) -> SelectionPath:
    """Solve every node's path and read all of them off one shared grid."""
    if rule not in ("and", "or"):
        raise ValueError("rule must be 'and' or 'or'")
    p = samples.p
    paths = [credible_path(node_posterior(samples, k)) for k in range(p)]
    if grid is None:
        grid = auto_grid(paths, delta_count)
    sup = np.zeros((grid.size, p, p), dtype=bool)
    for k, path in enumerate(paths):
        for m, d in enumerate(grid.values):
            sup[m, k] = _expand(path.support_at(d), k)
    if nested:
        # union over all larger penalties
        sup = np.logical_or.accumulate(sup[::-1], axis=0)[::-1]
    terminals = np.array([p_.terminal for p_ in paths])
    return SelectionPath(grid, sup, rule, terminals)
