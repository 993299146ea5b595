"""Sampler-correctness diagnostics (Geweke's joint-distribution test)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RngStream, sample_gamma, sample_mvn_zero, sample_wishart_std, spd_inverse
from .sampler import ChainState, Hyperparameters, Prior, gibbs_sweep

__all__ = ["batch_means_se", "prior_draw", "GewekeResult", "geweke_test", "DEFAULT_STATISTICS"]


def batch_means_se(x, n_batches: int = 50) -> float:
    """Monte-Carlo standard error of the mean of a correlated series."""
    x = np.asarray(x, dtype=float)
    m = x.size // n_batches
    if m < 2:
        return float(x.std(ddof=1) / np.sqrt(x.size))
    means = x[: m * n_batches].reshape(n_batches, m).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def prior_draw(hyper: Hyperparameters, rng: RngStream) -> ChainState:
    """Forward draw of (Omega, D, lambda) from the prior."""
    p = hyper.p
    if hyper.variant is Prior.IW_BASELINE:
        lam = hyper.a_lambda / hyper.b_lambda
        d = np.full(p, sample_gamma(1.0, 1.0, rng))
    else:
        lam = sample_gamma(hyper.a_lambda, hyper.b_lambda, rng)
        d = 1.0 / sample_gamma(np.full(p, 0.5 * hyper.b + 1.0), 0.5 * lam * lam, rng)
    omega = sample_wishart_std(hyper.b + p - 1, np.diag(1.0 / d), rng)
    return ChainState(omega, d, np.asarray(lam, dtype=float))


def _omega11(s):
    return s.omega[0, 0]


def _lam1(s):
    return s.lam[0]


def _d1(s):
    return s.d[0]


def _trace(s):
    return np.trace(s.omega)


DEFAULT_STATISTICS = {"omega_11": _omega11, "lambda_1": _lam1, "d_1": _d1, "trace_omega": _trace}


@dataclass
class GewekeResult:
    names: list
    forward_mean: np.ndarray
    forward_se: np.ndarray
    chain_mean: np.ndarray
    chain_se: np.ndarray
    error: str | None = None

    @property
    def z(self) -> np.ndarray:
        diff = self.forward_mean - self.chain_mean
        se = np.sqrt(self.forward_se**2 + self.chain_se**2)
        # a statistic held fixed by both samplers (lambda under the baseline) scores 0
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(se > 0, diff / se, np.where(diff == 0, 0.0, np.inf))

    def passed(self, zmax: float = 3.0) -> bool:
        return self.error is None and bool(np.all(np.abs(self.z) <= zmax))

    def summary(self) -> str:
        if self.error is not None:
            return f"successive-conditional chain aborted: {self.error}"
        rows = [
            f"{nm:12s} forward {fm:.5g} ± {fs:.2g}  chain {cm:.5g} ± {cs:.2g}  z={z:+.2f}"
            for nm, fm, fs, cm, cs, z in zip(
                self.names, self.forward_mean, self.forward_se, self.chain_mean, self.chain_se, self.z
            )
        ]
        return "\n".join(rows)


def geweke_test(
    hyper: Hyperparameters,
    n: int,
    n_forward: int,
    n_chain: int,
    rng: RngStream,
    statistics: dict | None = None,
    burnin: int = 1000,
) -> GewekeResult:
    """Compare marginal-conditional and successive-conditional simulators.

    The forward simulator draws parameters from the prior and data given the
    parameters. The successive-conditional simulator alternates one Gibbs
    sweep with a fresh data draw given the current parameters. Both target the
    same joint law, so parameter statistics must agree when every update is a
    correct full conditional.
    """
    stats = statistics or DEFAULT_STATISTICS
    names = list(stats)
    fwd_rng, chain_rng = rng.child(0), rng.child(1)

    fwd = np.empty((n_forward, len(names)))
    for i in range(n_forward):
        s = prior_draw(hyper, fwd_rng)
        fwd[i] = [f(s) for f in stats.values()]

    state = prior_draw(hyper, chain_rng)
    out = np.full((n_chain, len(names)), np.nan)
    error = None
    for i in range(burnin + n_chain):
        try:
            x = sample_mvn_zero(spd_inverse(state.omega), n, chain_rng)
            state = gibbs_sweep(state, x.T @ x, n, hyper, chain_rng)
            state.check()
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            error = f"iteration {i}: {exc}"
            break
        if i >= burnin:
            out[i - burnin] = [f(state) for f in stats.values()]

    return GewekeResult(
        names=names,
        forward_mean=fwd.mean(axis=0),
        forward_se=fwd.std(axis=0, ddof=1) / np.sqrt(n_forward),
        chain_mean=out.mean(axis=0),
        chain_se=np.array([batch_means_se(out[:, j]) for j in range(len(names))]),
        error=error,
    )
