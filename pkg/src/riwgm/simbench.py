"""Simulation generators, ground truth and edge-recovery metrics."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import RngStream, as_spd, sample_mvn_zero
from .fdr import fdr_threshold, inclusion_matrix, point_estimate
from .sampler import DUpdate, LambdaUpdate, Prior, default_hyperparameters, run_chain, standardize
from .selection import build_path

__all__ = [
    "FgnSpec",
    "fgn_covariance",
    "partial_correlations",
    "true_edge_set",
    "TruthSpec",
    "sparse_precision_generator",
    "ConfusionMetrics",
    "confusion",
    "roc_points",
    "roc_auc",
    "auc_or_nan",
    "hub_degrees",
    "bic_score",
    "CM_THRESHOLDS",
    "NAMED_THRESHOLDS",
    "EstimatorConfig",
    "run_replicate",
    "run_case1",
    "summarize",
]

CM_THRESHOLDS = np.linspace(0.005, 0.26, 20)
NAMED_THRESHOLDS = {"ES1": 0.1, "ES005": 0.005}


@dataclass
class FgnSpec:
    p: int
    hurst: float = 0.7

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be positive")
        if not 0.5 <= self.hurst <= 1.0:
            raise ValueError("hurst must lie in [0.5, 1]")


def fgn_covariance(spec: FgnSpec) -> np.ndarray:
    """Toeplitz covariance of unit-variance fractional Gaussian noise."""
    h2 = 2.0 * spec.hurst
    lag = np.abs(np.subtract.outer(np.arange(spec.p), np.arange(spec.p))).astype(float)
    cov = 0.5 * (np.abs(lag + 1.0) ** h2 - 2.0 * lag**h2 + np.abs(lag - 1.0) ** h2)
    return as_spd(cov, "fGn covariance")


def partial_correlations(omega) -> np.ndarray:
    """``-omega_ij / sqrt(omega_ii omega_jj)`` with a zero diagonal."""
    om = np.asarray(omega, dtype=float)
    s = 1.0 / np.sqrt(np.diag(om))
    rho = -om * s[:, None] * s[None, :]
    np.fill_diagonal(rho, 0.0)
    return np.clip(rho, -1.0, 1.0)


def true_edge_set(omega0, c_m: float) -> np.ndarray:
    """Edges whose absolute partial correlation exceeds ``c_m``."""
    if c_m < 0:
        raise ValueError("threshold must be non-negative")
    om = np.asarray(omega0, dtype=float)
    if c_m == 0:
        adj = om != 0
    else:
        adj = np.abs(partial_correlations(om)) > c_m
    adj = adj.copy()
    np.fill_diagonal(adj, False)
    return adj


@dataclass
class TruthSpec:
    omega0: np.ndarray
    hubs: list = field(default_factory=list)

    @property
    def degrees(self) -> np.ndarray:
        return true_edge_set(self.omega0, 0.0).sum(axis=1)


def sparse_precision_generator(
    p: int,
    hub_count: int,
    hub_degree_min: int,
    rng: RngStream,
    extra_edges: int = 0,
    magnitude: tuple[float, float] = (0.2, 0.5),
    margin: float = 0.5,
) -> TruthSpec:
    """Sparse SPD precision with designated hub nodes.

    Each hub is joined to ``hub_degree_min`` random other nodes, then
    ``extra_edges`` further random edges are added. Off-diagonal magnitudes are
    uniform on ``magnitude`` with random signs; each diagonal entry is the
    absolute off-diagonal row sum plus ``margin``, so the result is strictly
    diagonally dominant.
    """
    if hub_count < 0 or hub_count > p:
        raise ValueError(f"cannot place {hub_count} hubs among {p} nodes")
    if hub_count and not 0 <= hub_degree_min <= p - 1:
        raise ValueError(f"hub degree {hub_degree_min} infeasible with p={p}")
    if extra_edges < 0 or margin <= 0 or not 0 < magnitude[0] <= magnitude[1]:
        raise ValueError("invalid edge count, margin or magnitude range")
    g = rng.generator
    adj = np.zeros((p, p), dtype=bool)
    hubs = sorted(g.choice(p, size=hub_count, replace=False).tolist()) if hub_count else []
    for h in hubs:
        have = int(adj[h].sum())
        need = hub_degree_min - have
        if need > 0:
            cand = np.flatnonzero(~adj[h])
            cand = cand[cand != h]
            pick = g.choice(cand, size=need, replace=False)
            adj[h, pick] = adj[pick, h] = True
    iu, ju = np.triu_indices(p, 1)
    free = np.flatnonzero(~adj[iu, ju])
    if extra_edges > free.size:
        raise ValueError(f"{extra_edges} extra edges requested, only {free.size} pairs free")
    if extra_edges:
        pick = g.choice(free, size=extra_edges, replace=False)
        adj[iu[pick], ju[pick]] = adj[ju[pick], iu[pick]] = True
    vals = g.uniform(magnitude[0], magnitude[1], size=(p, p)) * g.choice([-1.0, 1.0], size=(p, p))
    vals = np.triu(vals, 1)
    om = np.where(adj, vals + vals.T, 0.0)
    np.fill_diagonal(om, np.abs(om).sum(axis=1) + margin)
    return TruthSpec(as_spd(om, "generated precision"), hubs)


@dataclass
class ConfusionMetrics:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def sp(self) -> float:
        d = self.tn + self.fp
        return self.tn / d if d else float("nan")

    @property
    def se(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else float("nan")

    @property
    def fpr(self) -> float:
        return 1.0 - self.sp


def confusion(estimate, truth) -> ConfusionMetrics:
    """Counts over unordered pairs ``i < j``."""
    est = np.asarray(estimate, dtype=bool)
    tru = np.asarray(truth, dtype=bool)
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch: estimate {est.shape}, truth {tru.shape}")
    i, j = np.triu_indices(est.shape[0], 1)
    e, t = est[i, j], tru[i, j]
    return ConfusionMetrics(int(np.sum(e & t)), int(np.sum(~e & ~t)), int(np.sum(e & ~t)), int(np.sum(~e & t)))


def roc_points(adjacencies, truth) -> np.ndarray:
    """(FPR, TPR) pairs of a sequence of graphs, with the corners added."""
    pts = [(0.0, 0.0), (1.0, 1.0)]
    for a in adjacencies:
        c = confusion(a, truth)
        pts.append((c.fpr, c.se))
    return np.array(pts)


def roc_auc(adjacencies, truth) -> float:
    """Trapezoidal area under the ROC curve of an ordering of graphs.

    Points are sorted by FPR and then TPR, so several graphs sharing an FPR
    form a vertical run of the curve.
    """
    pts = roc_points(adjacencies, truth)
    if np.isnan(pts).any():
        raise ValueError("truth has no edges or no non-edges; ROC undefined")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    return float(np.sum(np.diff(pts[:, 0]) * 0.5 * (pts[1:, 1] + pts[:-1, 1])))


def auc_or_nan(adjacencies, truth) -> float:
    """AUC, or NaN when the truth lacks either edges or non-edges."""
    t = np.asarray(truth, dtype=bool)
    upper = t[np.triu_indices(t.shape[0], 1)]
    if not upper.any() or upper.all():
        return float("nan")
    return roc_auc(adjacencies, t)


def hub_degrees(adjacency, threshold: int) -> list[tuple[int, int]]:
    """Nodes of degree above ``threshold``, largest degree first."""
    adj = np.asarray(adjacency, dtype=bool)
    deg = adj.sum(axis=1) - np.diag(adj)
    nodes = np.flatnonzero(deg > threshold)
    order = sorted(nodes.tolist(), key=lambda k: (-deg[k], k))
    return [(k, int(deg[k])) for k in order]


def bic_score(omega_est, x) -> float:
    """BIC-type score of a precision estimate, lower is better.

    ``n * (-log|Omega| + tr(Omega X'X / n)) + (log n / n) * #{i <= j : omega_ij != 0}``
    """
    om = np.asarray(omega_est, dtype=float)
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    sign, logdet = np.linalg.slogdet(om)
    if sign <= 0:
        raise ValueError("precision estimate has non-positive determinant")
    s = x.T @ x / n
    nnz = int(np.count_nonzero(np.triu(om)))
    return float(n * (-logdet + np.sum(om * s)) + np.log(n) / n * nnz)


@dataclass
class EstimatorConfig:
    prior: str = "riw"
    conditional_d: str = "paper_ig"
    lambda_update: str = "paper"
    iters: int = 15000
    burnin: int = 5000
    delta_count: int = 50
    rule: str = "and"
    eta: float = 0.2


def run_replicate(n: int, p: int, hurst: float, seed: int, config: EstimatorConfig, thresholds=None) -> dict:
    """One Case I replicate: simulate, fit, select, score."""
    thresholds = CM_THRESHOLDS if thresholds is None else np.asarray(thresholds)
    cov = fgn_covariance(FgnSpec(p, hurst))
    omega0 = np.linalg.inv(cov)
    root = RngStream(seed)
    x = sample_mvn_zero(cov, n, root.child(0))
    data = standardize(x)
    hyper = default_hyperparameters(
        n,
        p,
        variant=Prior(config.prior),
        conditional_d=DUpdate(config.conditional_d),
        lambda_update=LambdaUpdate(config.lambda_update),
    )
    t0 = time.perf_counter()
    samples = run_chain(data, hyper, config.iters, config.burnin, root.child(1), log_every=0)
    t1 = time.perf_counter()
    path = build_path(samples, rule=config.rule, delta_count=config.delta_count)
    adjs = path.adjacencies()
    inc = inclusion_matrix(path)
    thr = fdr_threshold(inc, config.eta)
    est = point_estimate(inc, thr.threshold, samples.omega_mean)
    t2 = time.perf_counter()
    aucs = {}
    points = {}
    for c in thresholds:
        truth = true_edge_set(omega0, float(c))
        # thresholds above the largest partial correlation leave no true edges
        aucs[float(c)] = auc_or_nan(adjs, truth)
    for name, c in NAMED_THRESHOLDS.items():
        truth = true_edge_set(omega0, c)
        cm = confusion(est.adjacency, truth)
        points[name] = {"auc": auc_or_nan(adjs, truth), "sp": cm.sp, "se": cm.se, **asdict(cm)}
    return {
        "seed": seed,
        "n": n,
        "p": p,
        "hurst": hurst,
        "config": asdict(config),
        "auc_by_threshold": aucs,
        "named": points,
        "fdr_threshold": thr.threshold,
        "fdr_count": thr.count,
        "edges": len(est.edges),
        "fit_seconds": t1 - t0,
        "select_seconds": t2 - t1,
    }


def _run_one(args):
    return run_replicate(*args)


def run_case1(
    n: int,
    p: int,
    hurst: float = 0.7,
    seeds=range(10),
    config: EstimatorConfig | None = None,
    thresholds=None,
    jobs: int = 1,
) -> list[dict]:
    """Replicates of the fractional-Gaussian-noise benchmark, one per seed."""
    config = config or EstimatorConfig()
    tasks = [(n, p, hurst, int(s), config, thresholds) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_one, tasks))
    return [_run_one(t) for t in tasks]


def summarize(records: list[dict]) -> dict:
    """Means and standard errors across replicates."""
    def mse(vals):
        v = np.asarray(vals, dtype=float)
        v = v[~np.isnan(v)]
        if v.size == 0:
            return {"mean": float("nan"), "se": float("nan")}
        se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else float("nan")
        return {"mean": float(v.mean()), "se": se}

    out = {"replicates": len(records), "named": {}, "auc_by_threshold": {}}
    for name in NAMED_THRESHOLDS:
        out["named"][name] = {
            key: mse([r["named"][name][key] for r in records]) for key in ("auc", "sp", "se")
        }
    if records:
        for c in records[0]["auc_by_threshold"]:
            out["auc_by_threshold"][c] = mse([r["auc_by_threshold"][c] for r in records])
    out["fit_seconds"] = mse([r["fit_seconds"] for r in records])
    return out
