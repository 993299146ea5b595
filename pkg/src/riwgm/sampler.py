"""Gibbs sampler for the regularized inverse-Wishart (RIW) graphical model.

Model (Wishart convention: ``Sigma ~ IW(b, D)`` means
``Omega = Sigma^-1 ~ Wishart(df=b+p-1, scale=D^-1)``)::

    X_i | Omega         ~ N(0, Omega^-1)
    Omega | D           ~ Wishart(b + p - 1, D^-1)
    d_k | lambda_k      ~ InvGamma(b/2 + 1, lambda_k^2 / 2)
    lambda_k            ~ Gamma(a_k, rate=b_k)

The unregularized baseline replaces the diagonal scale by ``D = d I`` with
``d ~ Gamma(1, 1)``.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import gammaln, kve, multigammaln

from .core import (
    RngStream,
    as_spd,
    cholesky_lower,
    sample_gamma,
    sample_gig,
    sample_tilted_gamma,
    spd_inverse,
    wishart_precision_draw,
)

logger = logging.getLogger(__name__)

__all__ = [
    "Prior",
    "DUpdate",
    "LambdaUpdate",
    "Hyperparameters",
    "ChainState",
    "ChainSamples",
    "DataMatrix",
    "standardize",
    "default_hyperparameters",
    "group_quantity",
    "conditional_precisions",
    "wishart_df",
    "step_update_omega",
    "step_update_d",
    "step_update_lambda",
    "step_update_d_iw_baseline",
    "gibbs_sweep",
    "initial_state",
    "run_chain",
    "log_prior_density",
]


class Prior(str, Enum):
    RIW = "riw"
    IW_BASELINE = "iw"


class DUpdate(str, Enum):
    """Full-conditional used for the diagonal scale ``D``.

    ``PAPER_IG`` is the inverse Gaussian with mean ``lambda/g`` and shape
    ``lambda^2``. ``EXACT_GIG`` is the exact conditional of the model above,
    GIG(order (p-3)/2, a=g, b=lambda^2).
    """

    PAPER_IG = "paper_ig"
    EXACT_GIG = "exact_gig"


class LambdaUpdate(str, Enum):
    """Update rule for the shrinkage vector ``lambda``.

    ``PAPER_PLUS_ONE`` and ``DERIVED`` draw Gamma(b + a_k + 1, b_k + sqrt(g_k))
    and Gamma(b + a_k, b_k + sqrt(g_k)) given Omega. ``EXACT`` draws from the
    exact conditional given ``d_k``, density
    ∝ lambda^(a_k+b+1) exp(-b_k lambda - lambda^2 / (2 d_k)).
    """

    PAPER_PLUS_ONE = "paper"
    DERIVED = "derived"
    EXACT = "exact"


@dataclass
class Hyperparameters:
    a_lambda: np.ndarray
    b_lambda: np.ndarray
    b: float = 3.0
    variant: Prior = Prior.RIW
    conditional_d: DUpdate = DUpdate.PAPER_IG
    lambda_update: LambdaUpdate = LambdaUpdate.PAPER_PLUS_ONE

    def __post_init__(self):
        self.a_lambda = np.asarray(self.a_lambda, dtype=float)
        self.b_lambda = np.broadcast_to(np.asarray(self.b_lambda, dtype=float), self.a_lambda.shape).copy()
        self.variant = Prior(self.variant)
        self.conditional_d = DUpdate(self.conditional_d)
        self.lambda_update = LambdaUpdate(self.lambda_update)
        if self.b < 3:
            raise ValueError(f"degrees of freedom b must be >= 3, got {self.b}")
        if np.any(self.a_lambda <= 0) or np.any(self.b_lambda <= 0):
            raise ValueError("a_lambda and b_lambda must be strictly positive")

    @property
    def p(self) -> int:
        return self.a_lambda.size

    def to_dict(self) -> dict:
        return {
            "b": float(self.b),
            "a_lambda": self.a_lambda.tolist(),
            "b_lambda": self.b_lambda.tolist(),
            "variant": self.variant.value,
            "conditional_d": self.conditional_d.value,
            "lambda_update": self.lambda_update.value,
            "wishart_convention": "Omega ~ Wishart(df=b+n+p-1, scale=(D+X'X)^-1)",
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparameters":
        return cls(
            a_lambda=d["a_lambda"],
            b_lambda=d["b_lambda"],
            b=d["b"],
            variant=d["variant"],
            conditional_d=d["conditional_d"],
            lambda_update=d["lambda_update"],
        )


@dataclass
class ChainState:
    omega: np.ndarray
    d: np.ndarray
    lam: np.ndarray
    iteration: int = 0

    def check(self):
        cholesky_lower(self.omega)
        if np.any(self.d <= 0) or np.any(self.lam <= 0):
            raise FloatingPointError(f"non-positive scale or shrinkage at iteration {self.iteration}")


@dataclass
class DataMatrix:
    x: np.ndarray
    standardized: bool
    column_means: np.ndarray
    column_sds: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def destandardize(self, z=None) -> np.ndarray:
        z = self.x if z is None else z
        return z * self.column_sds + self.column_means


def standardize(raw) -> DataMatrix:
    """Center columns and scale to unit sample standard deviation (ddof=1)."""
    x = np.asarray(raw, dtype=float)
    if x.ndim != 2:
        raise ValueError("data must be a 2-d array")
    if x.shape[0] < 2:
        raise ValueError("need at least two observations to standardize")
    means = x.mean(axis=0)
    sds = x.std(axis=0, ddof=1)
    const = np.flatnonzero(sds <= 1e-12 * np.maximum(1.0, np.abs(means)))
    if const.size:
        raise ValueError(f"column {const[0]} is constant")
    return DataMatrix((x - means) / sds, True, means, sds)


def default_hyperparameters(n: int, p: int, **overrides) -> Hyperparameters:
    """Default schedule: ``a_lambda`` evenly spaced from n down to max(n/2, p),
    constant at max(n/2, p) when that endpoint is not below n; ``b = 3``."""
    if n < 2 or p < 2:
        raise ValueError("default hyperparameters need n >= 2 and p >= 2")
    end = max(n / 2.0, float(p))
    a = np.full(p, end) if end >= n else np.linspace(float(n), end, p)
    kw = dict(a_lambda=a, b_lambda=np.ones(p), b=3.0)
    kw.update(overrides)
    return Hyperparameters(**kw)


def group_quantity(omega, k: int, method: str = "direct") -> float:
    """Penalty quantity of group ``k``.

    The Cholesky-regression sum ``sum_l omega^-1_{m,mm} omega^2_{m,mk} + omega_{k,kk}``
    over leading blocks ``m = k+1..p`` collapses to ``Omega[k, k]``.
    ``method="blocks"`` evaluates the sum explicitly by inverting each leading
    principal block of ``Sigma = Omega^-1``.
    """
    omega = np.asarray(omega, dtype=float)
    if method == "direct":
        return float(omega[k, k])
    if method != "blocks":
        raise ValueError(f"unknown method {method!r}")
    sigma = spd_inverse(omega)
    p = omega.shape[0]
    om_k = spd_inverse(sigma[: k + 1, : k + 1])
    total = om_k[k, k]
    for m in range(k + 1, p):
        om_m = spd_inverse(sigma[: m + 1, : m + 1])
        total += om_m[m, k] ** 2 / om_m[m, m]
    return float(total)


def conditional_precisions(sigma) -> np.ndarray:
    """Residual precisions ``omega_{k,kk}`` of the regressions of x_k on x_1..x_{k-1}."""
    chol = cholesky_lower(sigma)
    return 1.0 / np.diag(chol) ** 2


def wishart_df(b: float, n: int, p: int) -> float:
    """Standard-convention degrees of freedom of the Omega full conditional."""
    return b + n + p - 1


def step_update_omega(state: ChainState, xtx: np.ndarray, n: int, hyper: Hyperparameters, rng: RngStream) -> np.ndarray:
    p = state.omega.shape[0]
    scale_inv = xtx + np.diag(state.d)
    return wishart_precision_draw(wishart_df(hyper.b, n, p), scale_inv, rng)


def step_update_d(state: ChainState, hyper: Hyperparameters, rng: RngStream) -> np.ndarray:
    g = np.diag(state.omega).copy()
    lam = state.lam
    if hyper.conditional_d is DUpdate.PAPER_IG:
        return rng.generator.wald(lam / g, lam * lam)
    p = g.size
    return sample_gig(np.full(p, 0.5 * (p - 3)), g, lam * lam, rng)


def step_update_lambda(state: ChainState, hyper: Hyperparameters, rng: RngStream) -> np.ndarray:
    if hyper.lambda_update is LambdaUpdate.EXACT:
        return sample_tilted_gamma(hyper.a_lambda + hyper.b + 2.0, hyper.b_lambda, state.d, rng)
    g = np.diag(state.omega)
    rate = hyper.b_lambda + np.sqrt(g)
    offset = 1.0 if hyper.lambda_update is LambdaUpdate.PAPER_PLUS_ONE else 0.0
    return sample_gamma(hyper.b + hyper.a_lambda + offset, rate, rng)


def step_update_d_iw_baseline(state: ChainState, hyper: Hyperparameters, rng: RngStream) -> np.ndarray:
    """Common scale ``d`` for ``D = d I``: Gamma(p(b+p-1)/2 + 1, 1 + tr(Omega)/2)."""
    if hyper.variant is not Prior.IW_BASELINE:
        raise RuntimeError("baseline d-update called under the RIW prior")
    p = state.omega.shape[0]
    shape = 0.5 * p * (hyper.b + p - 1) + 1.0
    rate = 1.0 + 0.5 * np.trace(state.omega)
    return np.full(p, sample_gamma(shape, rate, rng))


def gibbs_sweep(state: ChainState, xtx: np.ndarray, n: int, hyper: Hyperparameters, rng: RngStream) -> ChainState:
    """One full sweep: Omega, then D, then lambda (RIW) or the common d (baseline)."""
    omega = step_update_omega(state, xtx, n, hyper, rng)
    state = ChainState(omega, state.d, state.lam, state.iteration + 1)
    if hyper.variant is Prior.IW_BASELINE:
        state.d = step_update_d_iw_baseline(state, hyper, rng)
        return state
    state.d = step_update_d(state, hyper, rng)
    state.lam = step_update_lambda(state, hyper, rng)
    return state


def initial_state(data: DataMatrix | np.ndarray, hyper: Hyperparameters) -> ChainState:
    x = data.x if isinstance(data, DataMatrix) else np.asarray(data, dtype=float)
    n, p = x.shape
    s = x.T @ x / max(n, 1)
    omega = spd_inverse(s + 0.01 * np.eye(p))
    lam = hyper.a_lambda / hyper.b_lambda
    return ChainState(omega, np.ones(p), lam.copy(), 0)


class _NodeMoments:
    """Batched streaming mean/covariance of the per-node coefficient vectors.

    Row k of the coefficient matrix holds ``-Omega[k, j] / Omega[k, k]`` with a
    zero at ``j = k``; batches are merged with the pairwise update of Chan et al.
    """

    def __init__(self, p: int, full: bool, batch: int = 64):
        self.p = p
        self.full = full
        self.count = 0
        self.mean = np.zeros((p, p))
        self.m2 = np.zeros((p, p, p)) if full else np.zeros((p, p))
        self._buf = np.empty((batch, p, p))
        self._fill = 0

    def push(self, omega: np.ndarray):
        diag = np.diag(omega)
        c = -omega / diag[:, None]
        np.fill_diagonal(c, 0.0)
        self._buf[self._fill] = c
        self._fill += 1
        if self._fill == self._buf.shape[0]:
            self.flush()

    def flush(self):
        nb = self._fill
        if nb == 0:
            return
        buf = self._buf[:nb]
        bmean = buf.mean(axis=0)
        cen = buf - bmean
        if self.full:
            bm2 = np.matmul(cen.transpose(1, 2, 0), cen.transpose(1, 0, 2))
        else:
            bm2 = np.einsum("tkj,tkj->kj", cen, cen)
        na = self.count
        tot = na + nb
        delta = bmean - self.mean
        self.mean += delta * (nb / tot)
        if self.full:
            self.m2 += bm2 + np.einsum("ki,kj->kij", delta, delta) * (na * nb / tot)
        else:
            self.m2 += bm2 + delta * delta * (na * nb / tot)
        self.count = tot
        self._fill = 0


@dataclass
class ChainSamples:
    """Posterior summaries streamed from a chain.

    ``coef_mean[k]`` is the posterior mean of the coefficient row of node k
    (zero at k); ``coef_m2`` holds the corresponding centered sums of squares,
    ``(p, p, p)`` in full mode or ``(p, p)`` diagonals in diagonal mode.
    """

    omega_mean: np.ndarray
    coef_mean: np.ndarray
    coef_m2: np.ndarray
    count: int
    d_mean: np.ndarray
    lam_mean: np.ndarray
    meta: dict = field(default_factory=dict)
    draws_omega: np.ndarray | None = None
    draws_d: np.ndarray | None = None
    draws_lam: np.ndarray | None = None

    @property
    def p(self) -> int:
        return self.omega_mean.shape[0]

    @property
    def full_covariance(self) -> bool:
        return self.coef_m2.ndim == 3

    def beta_hat(self, k: int) -> np.ndarray:
        return np.delete(self.coef_mean[k], k)

    def beta_cov(self, k: int) -> np.ndarray:
        """Sample covariance (ddof=1) of node k's coefficients, j != k ascending."""
        if self.count < 2:
            raise ValueError("need at least two draws for a covariance")
        if self.full_covariance:
            m2 = np.delete(np.delete(self.coef_m2[k], k, axis=0), k, axis=1)
        else:
            m2 = np.diag(np.delete(self.coef_m2[k], k))
        return m2 / (self.count - 1)


def run_chain(
    data: DataMatrix,
    hyper: Hyperparameters,
    iters: int,
    burnin: int,
    rng: RngStream,
    thin: int = 1,
    store_draws: bool = False,
    node_cov: str | None = None,
    log_every: int = 1000,
) -> ChainSamples:
    """Run the Gibbs sampler and stream posterior moments after burn-in.

    Parameters
    ----------
    data : DataMatrix
        Standardized observations.
    iters, burnin : int
        Total sweeps and discarded initial sweeps (``iters > burnin >= 0``).
    thin : int
        Stored-draw thinning. Moments always use every post-burn-in sweep.
    node_cov : {"full", "diag"}, optional
        Per-node covariance accumulator; defaults to "full" for p <= 300.
    """
    if not isinstance(data, DataMatrix) or not data.standardized:
        raise ValueError("run_chain expects standardized data (see standardize)")
    if not (iters > burnin >= 0):
        raise ValueError("need iters > burnin >= 0")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    n, p = data.x.shape
    if hyper.p != p:
        raise ValueError(f"hyperparameters sized for p={hyper.p}, data has p={p}")
    node_cov = node_cov or ("full" if p <= 300 else "diag")
    if node_cov not in ("full", "diag"):
        raise ValueError("node_cov must be 'full' or 'diag'")

    xtx = data.x.T @ data.x
    state = initial_state(data, hyper)
    moments = _NodeMoments(p, node_cov == "full")
    omega_sum = np.zeros((p, p))
    d_sum = np.zeros(p)
    lam_sum = np.zeros(p)
    stored = ([], [], [])
    t0 = time.perf_counter()
    tlast = t0
    for it in range(1, iters + 1):
        try:
            state = gibbs_sweep(state, xtx, n, hyper, rng)
            if not (np.all(state.d > 0) and np.all(state.lam > 0) and np.all(np.isfinite(state.omega))):
                raise FloatingPointError("non-positive or non-finite state")
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            raise RuntimeError(f"sampler failed at iteration {it}: {exc}") from exc
        if it > burnin:
            omega_sum += state.omega
            d_sum += state.d
            lam_sum += state.lam
            moments.push(state.omega)
            if store_draws and (it - burnin) % thin == 0:
                stored[0].append(state.omega)
                stored[1].append(state.d)
                stored[2].append(state.lam)
        if log_every and it % log_every == 0:
            now = time.perf_counter()
            logger.info("iteration %d/%d (%.2fs for last %d)", it, iters, now - tlast, log_every)
            tlast = now
    moments.flush()
    m = iters - burnin
    meta = {
        "iters": iters,
        "burnin": burnin,
        "thin": thin,
        "seed": rng.seed,
        "stream": list(rng.key),
        "n": n,
        "p": p,
        "node_cov": node_cov,
        "seconds": time.perf_counter() - t0,
    }
    out = ChainSamples(
        omega_mean=0.5 * (omega_sum + omega_sum.T) / m,
        coef_mean=moments.mean,
        coef_m2=moments.m2,
        count=moments.count,
        d_mean=d_sum / m,
        lam_mean=lam_sum / m,
        meta=meta,
    )
    if store_draws:
        out.draws_omega = np.array(stored[0]).reshape(-1, p, p)
        out.draws_d = np.array(stored[1]).reshape(-1, p)
        out.draws_lam = np.array(stored[2]).reshape(-1, p)
    return out


def log_prior_density(sigma, lam, b: float = 3.0, form: str = "mixture") -> float:
    """Log prior density of ``Sigma`` given ``lambda`` with ``D`` integrated out.

    ``form="mixture"`` is the exact, normalized log density of the IW x inverse
    gamma mixture. Each group contributes a GIG normalizer

        lambda_k^(b+2) (lambda_k^2 / g_k)^(q/2) K_q(lambda_k sqrt(g_k)),  q = (p-3)/2,

    with ``g_k`` the group quantity of ``Omega = Sigma^-1``. For ``p = 2``
    the Bessel factor reduces to ``exp(-lambda_k sqrt(g_k))``, the group-lasso
    form. ``form="printed"`` evaluates the unnormalized kernel
    ``sum_k [b log lambda_k + (b+p-1)/2 log omega_{k,kk} - lambda_k sqrt(g_k)]``.
    """
    sigma = as_spd(sigma, "sigma")
    p = sigma.shape[0]
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (p,))
    if np.any(lam <= 0):
        raise ValueError("lambda must be positive")
    omega = spd_inverse(sigma)
    g = np.array([group_quantity(omega, k) for k in range(p)])
    if form == "printed":
        wkk = conditional_precisions(sigma)
        return float(np.sum(b * np.log(lam) + 0.5 * (b + p - 1) * np.log(wkk) - lam * np.sqrt(g)))
    if form != "mixture":
        raise ValueError(f"unknown form {form!r}")
    nu = b + p - 1
    logdet_sigma = 2.0 * np.sum(np.log(np.diag(cholesky_lower(sigma))))
    out = -0.5 * (nu + p + 1) * logdet_sigma - 0.5 * nu * p * np.log(2.0) - multigammaln(0.5 * nu, p)
    s = 0.5 * b + 1.0
    q = 0.5 * (p - 3)
    z = lam * np.sqrt(g)
    log_bessel = np.log(kve(q, z)) - z
    out += np.sum(s * np.log(0.5 * lam * lam) - gammaln(s) + np.log(2.0) + 0.5 * q * np.log(lam * lam / g) + log_bessel)
    return float(out)
