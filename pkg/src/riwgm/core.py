"""Seedable random samplers and dense SPD matrix kernels.

Every stochastic routine in the package takes an :class:`RngStream`; there is
no module-level random state.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import lapack, solve_triangular

__all__ = [
    "DecompositionError",
    "RngStream",
    "as_spd",
    "cholesky_lower",
    "spd_inverse",
    "wishart_from_factor",
    "sample_wishart_std",
    "sample_gamma",
    "sample_gig",
    "sample_tilted_gamma",
    "sample_mvn_zero",
]

# relative asymmetry tolerated before (M + M.T)/2 is applied
_SYMMETRY_RTOL = 1e-8


class DecompositionError(np.linalg.LinAlgError):
    """Cholesky factorization failed at ``pivot`` (0-based)."""

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite: cholesky failed at pivot {pivot}")


class RngStream:
    """Deterministic random stream keyed by ``(seed, stream_id)``.

    Streams with equal keys produce bit-identical sequences; distinct keys are
    independent (numpy ``SeedSequence`` spawn keys).

    Parameters
    ----------
    seed : int
        Master seed (64-bit).
    stream_id : int or tuple of int
        Stream key. Tuples address nested sub-streams.
    """

    def __init__(self, seed: int, stream_id: int | tuple[int, ...] = 0):
        self.seed = int(seed)
        key = (stream_id,) if np.isscalar(stream_id) else tuple(stream_id)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, i: int) -> "RngStream":
        """Independent sub-stream ``i`` of this stream."""
        return RngStream(self.seed, self.key + (int(i),))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def as_spd(m, name: str = "matrix") -> np.ndarray:
    """Validate and return a symmetric positive definite copy of ``m``."""
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    if np.abs(a - a.T).max() > _SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} is not symmetric")
    a = 0.5 * (a + a.T)
    cholesky_lower(a)
    return a


def cholesky_lower(m) -> np.ndarray:
    """Lower Cholesky factor ``L`` with ``L @ L.T == m``.

    Raises
    ------
    DecompositionError
        If ``m`` is not positive definite; ``.pivot`` names the failing
        (0-based) leading minor.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return a.copy()
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    c, info = lapack.dpotrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise DecompositionError(int(info) - 1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return c


def spd_inverse(m) -> np.ndarray:
    """Inverse of an SPD matrix through its Cholesky factor."""
    c = cholesky_lower(m)
    inv, info = lapack.dpotri(c, lower=1)
    if info != 0:
        raise DecompositionError(int(info) - 1, "dpotri failed")
    inv = np.tril(inv)
    return inv + np.tril(inv, -1).T


def wishart_from_factor(df: float, factor: np.ndarray, rng: RngStream) -> np.ndarray:
    """Bartlett draw ``F A A' F'`` where ``F F'`` is the Wishart scale.

    ``factor`` may be any square root of the scale matrix, not only the
    lower Cholesky factor.
    """
    p = factor.shape[0]
    if df <= p - 1:
        raise ValueError(f"Wishart degrees of freedom must exceed dim - 1 = {p - 1}, got {df}")
    g = rng.generator
    a = np.zeros((p, p))
    a[np.diag_indices(p)] = np.sqrt(g.chisquare(df - np.arange(p)))
    il = np.tril_indices(p, -1)
    a[il] = g.standard_normal(il[0].size)
    fa = factor @ a
    w = fa @ fa.T
    return 0.5 * (w + w.T)


def sample_wishart_std(df: float, scale, rng: RngStream) -> np.ndarray:
    """Draw from the standard Wishart with density
    ``|W|^((df-p-1)/2) exp(-tr(scale^-1 W)/2)`` (mean ``df * scale``)."""
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    return wishart_from_factor(df, cholesky_lower(scale), rng)


def wishart_precision_draw(df: float, scale_inv: np.ndarray, rng: RngStream) -> np.ndarray:
    """Wishart draw with scale ``inv(scale_inv)``, without forming the inverse.

    With ``scale_inv = R R'`` the factor ``R^-T`` squares to the scale.
    """
    r = cholesky_lower(scale_inv)
    p = r.shape[0]
    if df <= p - 1:
        raise ValueError(f"Wishart degrees of freedom must exceed dim - 1 = {p - 1}, got {df}")
    g = rng.generator
    a = np.zeros((p, p))
    a[np.diag_indices(p)] = np.sqrt(g.chisquare(df - np.arange(p)))
    il = np.tril_indices(p, -1)
    a[il] = g.standard_normal(il[0].size)
    fa = solve_triangular(r, a, lower=True, trans="T")
    w = fa @ fa.T
    return 0.5 * (w + w.T)


def sample_gamma(shape, rate, rng: RngStream, size=None):
    """Gamma draws parameterized by shape and rate (mean ``shape/rate``)."""
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(shape <= 0) or np.any(rate <= 0):
        raise ValueError("gamma shape and rate must be positive")
    return rng.generator.gamma(shape, 1.0 / rate, size=size)


def _psi(x, alpha, lam):
    return -alpha * (np.cosh(x) - 1.0) - lam * (np.expm1(x) - x)


def _dpsi(x, alpha, lam):
    return -alpha * np.sinh(x) - lam * np.expm1(x)


def _gig_standard(lam: np.ndarray, omega: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Devroye's rejection sampler for density ∝ x^(lam-1) exp(-omega (x + 1/x) / 2),
    ``lam >= 0``, ``omega > 0``, run on the log scale around the mode."""
    s_ = np.sqrt(omega * omega + lam * lam)
    alpha = omega * omega / (s_ + lam)  # sqrt(omega^2 + lam^2) - lam, cancellation-free

    x = -_psi(1.0, alpha, lam)
    with np.errstate(divide="ignore"):
        t = np.where(
            (x >= 0.5) & (x <= 2.0),
            1.0,
            np.where(x > 2.0, np.sqrt(2.0 / (alpha + lam)), np.log(4.0 / (alpha + 2.0 * lam))),
        )
        x = -_psi(-1.0, alpha, lam)
        ia = 1.0 / alpha
        s_small = np.log1p(ia + np.sqrt(ia * ia + 2.0 * ia))
        inv_lam = np.divide(1.0, lam, out=np.full_like(lam, np.inf), where=lam > 0)
        s_small = np.minimum(inv_lam, s_small)
        s = np.where(
            (x >= 0.5) & (x <= 2.0),
            1.0,
            np.where(x > 2.0, np.sqrt(4.0 / (alpha * np.cosh(1.0) + lam)), s_small),
        )

    eta = -_psi(t, alpha, lam)
    zeta = -_dpsi(t, alpha, lam)
    theta = -_psi(-s, alpha, lam)
    xi = _dpsi(-s, alpha, lam)
    p = 1.0 / xi
    r = 1.0 / zeta
    td = t - r * eta
    sd = s - p * theta
    q = td + sd
    tot = p + q + r

    out = np.empty_like(lam)
    todo = np.arange(lam.size)
    while todo.size:
        m = todo.size
        u = gen.random(m)
        v = gen.random(m)
        w = gen.random(m)
        q_, r_, p_, td_, sd_, t_ = q[todo], r[todo], p[todo], td[todo], sd[todo], t[todo]
        s__ = s[todo]
        mid = u < q_ / tot[todo]
        right = ~mid & (u < (q_ + r_) / tot[todo])
        with np.errstate(divide="ignore"):
            lv = np.log(v)
        cand = np.where(mid, -sd_ + q_ * v, np.where(right, td_ - r_ * lv, -sd_ + p_ * lv))
        env = np.ones(m)
        hi = cand > td_
        lo = cand < -sd_
        env[hi] = np.exp(-eta[todo][hi] - zeta[todo][hi] * (cand[hi] - t_[hi]))
        env[lo] = np.exp(-theta[todo][lo] + xi[todo][lo] * (cand[lo] + s__[lo]))
        acc = w * env <= np.exp(_psi(cand, alpha[todo], lam[todo]))
        out[todo[acc]] = cand[acc]
        todo = todo[~acc]
    return np.exp(out) * (lam / omega + np.sqrt(1.0 + (lam / omega) ** 2))


def sample_gig(order, a, b, rng: RngStream, size=None):
    """Generalized inverse Gaussian draws, density ∝ x^(order-1) exp(-(a x + b/x)/2).

    Parameters broadcast against each other (and ``size``). Orders ±1/2 use
    the inverse-Gaussian transform method; other orders use a rejection
    sampler that is valid for every order.
    """
    order, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (order, a, b)))
    if size is not None:
        order, a, b = (np.broadcast_to(v, size) for v in (order, a, b))
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("GIG parameters a and b must be positive")
    gen = rng.generator
    shape = order.shape
    order, a, b = order.ravel(), a.ravel(), b.ravel()
    out = np.empty(order.size)

    neg_half = order == -0.5
    pos_half = order == 0.5
    if neg_half.any():
        out[neg_half] = gen.wald(np.sqrt(b[neg_half] / a[neg_half]), b[neg_half])
    if pos_half.any():
        out[pos_half] = 1.0 / gen.wald(np.sqrt(a[pos_half] / b[pos_half]), a[pos_half])
    rest = ~(neg_half | pos_half)
    if rest.any():
        lam = order[rest]
        swap = lam < 0
        z = _gig_standard(np.abs(lam), np.sqrt(a[rest] * b[rest]), gen)
        z = np.where(swap, 1.0 / z, z)
        out[rest] = z * np.sqrt(b[rest] / a[rest])
    out = out.reshape(shape)
    return out if out.ndim else float(out)


def sample_tilted_gamma(shape, rate, var, rng: RngStream):
    """Draws from density ∝ x^(shape-1) exp(-rate x - x^2 / (2 var)) on x > 0.

    Gamma proposal from the tangent of the quadratic at the mode; the
    acceptance rate is at least 1/sqrt(2) for ``shape >= 1``.
    """
    shape, rate, var = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (shape, rate, var)))
    if np.any(shape < 1) or np.any(rate < 0) or np.any(var <= 0):
        raise ValueError("tilted gamma requires shape >= 1, rate >= 0, var > 0")
    dims = shape.shape
    shape, rate, var = shape.ravel(), rate.ravel(), var.ravel()
    mode = 0.5 * (-rate * var + np.sqrt((rate * var) ** 2 + 4.0 * (shape - 1.0) * var))
    prop_rate = rate + mode / var
    # shape == 1 with rate == 0 puts the mode at 0; any positive tangent point works
    prop_rate = np.where(prop_rate > 0, prop_rate, 1.0 / np.sqrt(var))
    mode = (prop_rate - rate) * var
    gen = rng.generator
    out = np.empty(shape.size)
    todo = np.arange(shape.size)
    while todo.size:
        x = gen.gamma(shape[todo], 1.0 / prop_rate[todo])
        acc = np.log(gen.random(todo.size)) <= -((x - mode[todo]) ** 2) / (2.0 * var[todo])
        out[todo[acc]] = x[acc]
        todo = todo[~acc]
    out = out.reshape(dims)
    return out if out.ndim else float(out)


def sample_mvn_zero(cov, n: int, rng: RngStream) -> np.ndarray:
    """``n`` i.i.d. rows from N(0, cov)."""
    chol = cholesky_lower(as_spd(cov, "cov"))
    z = rng.generator.standard_normal((int(n), chol.shape[0]))
    return z @ chol.T
