import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from riwgm.core import (
    DecompositionError,
    RngStream,
    as_spd,
    cholesky_lower,
    sample_gamma,
    sample_gig,
    sample_mvn_zero,
    sample_tilted_gamma,
    sample_wishart_std,
    spd_inverse,
    wishart_precision_draw,
)


def random_spd(p, seed):
    g = np.random.default_rng(seed)
    a = g.normal(size=(p, p))
    return a @ a.T + 0.5 * np.eye(p)


def gig_pdf(order, a, b):
    # unnormalized density, normalized by quadrature
    f = lambda x: x ** (order - 1) * np.exp(-(a * x + b / x) / 2)
    z = integrate.quad(f, 0, np.inf)[0]
    return lambda x: f(x) / z


def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky_lower(np.eye(3)), np.eye(3))


def test_cholesky_hand_case():
    l = cholesky_lower([[4.0, 2.0], [2.0, 3.0]])
    np.testing.assert_allclose(l, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], atol=1e-15)


def test_cholesky_round_trip():
    m = random_spd(6, 0)
    l = cholesky_lower(m)
    assert np.allclose(l, np.tril(l))
    assert np.linalg.norm(l @ l.T - m) / np.linalg.norm(m) < 1e-10


def test_cholesky_reports_failing_pivot():
    m = np.diag([1.0, 2.0, -1.0, 3.0])
    with pytest.raises(DecompositionError) as info:
        cholesky_lower(m)
    assert info.value.pivot == 2
    assert "pivot 2" in str(info.value)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_cholesky_reconstructs_spd(p, seed):
    m = random_spd(p, seed)
    l = cholesky_lower(m)
    assert np.linalg.norm(l @ l.T - m) <= 1e-10 * np.linalg.norm(m)


def test_spd_inverse_examples():
    np.testing.assert_allclose(spd_inverse(np.eye(4)), np.eye(4))
    np.testing.assert_allclose(spd_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))
    m = random_spd(8, 1)
    inv = spd_inverse(m)
    assert np.abs(m @ inv - np.eye(8)).max() < 1e-8
    np.testing.assert_array_equal(inv, inv.T)


def test_spd_inverse_rejects_indefinite():
    with pytest.raises(DecompositionError):
        spd_inverse([[1.0, 2.0], [2.0, 1.0]])


def test_as_spd_symmetrizes_small_drift_and_rejects_asymmetry():
    m = random_spd(4, 2)
    drift = m.copy()
    drift[0, 1] += 1e-12
    out = as_spd(drift)
    np.testing.assert_array_equal(out, out.T)
    bad = m.copy()
    bad[0, 1] += 1.0
    with pytest.raises(ValueError):
        as_spd(bad)


def test_rng_stream_reproducible_and_distinct():
    a = RngStream(7, 3).generator.normal(size=5)
    b = RngStream(7, 3).generator.normal(size=5)
    c = RngStream(7, 4).generator.normal(size=5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    np.testing.assert_array_equal(RngStream(7, 3).child(1).generator.normal(size=3), RngStream(7, (3, 1)).generator.normal(size=3))


def test_samplers_are_reproducible():
    s = random_spd(3, 3)
    for f in (
        lambda r: sample_wishart_std(5.0, s, r),
        lambda r: sample_gamma(2.0, 3.0, r, size=4),
        lambda r: sample_gig(-1.0, 2.0, 3.0, r, size=4),
        lambda r: sample_mvn_zero(s, 4, r),
        lambda r: sample_tilted_gamma(3.0, 1.0, 2.0, r),
    ):
        np.testing.assert_array_equal(f(RngStream(11, 0)), f(RngStream(11, 0)))


def test_wishart_scalar_is_chi_square():
    rng = RngStream(1)
    df = 4.5
    w = np.array([sample_wishart_std(df, [[1.0]], rng)[0, 0] for _ in range(100_000)])
    assert stats.kstest(w, stats.chi2(df).cdf).pvalue > 0.01


def test_wishart_mean_and_variance():
    rng = RngStream(2)
    scale = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.3], [0.0, 0.3, 1.5]])
    df = 6.0
    draws = np.array([sample_wishart_std(df, scale, rng) for _ in range(100_000)])
    mean = draws.mean(axis=0)
    se = draws.std(axis=0) / np.sqrt(len(draws))
    assert np.all(np.abs(mean - df * scale) <= 3 * se + 1e-12)
    var_ii = draws[:, [0, 1, 2], [0, 1, 2]].var(axis=0, ddof=1)
    target = 2 * df * np.diag(scale) ** 2
    # standard error of a sample variance of a gamma law: sqrt(mu4 - sigma^4) / sqrt(N)
    d = draws[:, [0, 1, 2], [0, 1, 2]]
    mu4 = ((d - d.mean(axis=0)) ** 4).mean(axis=0)
    se_var = np.sqrt((mu4 - var_ii**2) / len(draws))
    assert np.all(np.abs(var_ii - target) <= 3 * se_var)


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_bartlett_diagonal_marginals(p):
    rng = RngStream(3, p)
    scale = random_spd(p, 40 + p)
    df = p + 2.5
    draws = np.array([sample_wishart_std(df, scale, rng) for _ in range(50_000)])
    for i in range(p):
        law = stats.gamma(df / 2, scale=2 * scale[i, i])
        assert stats.kstest(draws[:, i, i], law.cdf).pvalue > 0.01


def test_precision_draw_matches_scale_draw_in_law():
    si = random_spd(3, 5)
    rng = RngStream(4)
    draws = np.array([wishart_precision_draw(7.0, si, rng) for _ in range(40_000)])
    target = 7.0 * np.linalg.inv(si)
    se = draws.std(axis=0) / np.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - target) <= 4 * se)


def test_wishart_rejects_small_df():
    with pytest.raises(ValueError):
        sample_wishart_std(1.5, np.eye(3), RngStream(0))


def test_gamma_exponential_case():
    x = sample_gamma(1.0, 1.0, RngStream(5), size=100_000)
    assert stats.kstest(x, stats.expon.cdf).pvalue > 0.01


def test_gamma_mean():
    x = sample_gamma(3.0, 2.0, RngStream(6), size=1_000_000)
    assert abs(x.mean() - 1.5) <= 3 * x.std() / 1000


def test_gamma_density_histogram():
    x = sample_gamma(0.5, 1.0, RngStream(7), size=1_000_000)
    edges = np.linspace(0.2, 4.0, 40)
    hist, _ = np.histogram(x, bins=edges)
    dens = hist / (x.size * np.diff(edges))
    # average of the pdf over each bin, from the cdf
    exact = np.diff(stats.gamma(0.5).cdf(edges)) / np.diff(edges)
    assert np.abs(dens - exact).max() < 0.02


def test_gamma_rejects_bad_parameters():
    with pytest.raises(ValueError):
        sample_gamma(0.0, 1.0, RngStream(0))
    with pytest.raises(ValueError):
        sample_gamma(1.0, -1.0, RngStream(0))


def test_gig_inverse_gaussian_mean():
    mu, lam = 2.0, 4.0
    x = sample_gig(-0.5, lam / mu**2, lam, RngStream(8), size=1_000_000)
    assert abs(x.mean() - mu) <= 3 * x.std() / 1000


def test_gig_order_minus_one_mean_by_quadrature():
    x = sample_gig(-1.0, 1.0, 1.0, RngStream(9), size=1_000_000)
    pdf = gig_pdf(-1.0, 1.0, 1.0)
    mean = integrate.quad(lambda t: t * pdf(t), 0, np.inf)[0]
    assert abs(x.mean() / mean - 1) < 0.01


def test_gig_median_by_quadrature():
    pdf = gig_pdf(-1.0, 4.0, 1.0)
    cdf = lambda q: integrate.quad(pdf, 0, q)[0]
    from scipy.optimize import brentq

    med = brentq(lambda q: cdf(q) - 0.5, 1e-6, 50)
    x = sample_gig(-1.0, 4.0, 1.0, RngStream(10), size=1_000_000)
    frac = np.mean(x < med)
    assert abs(frac - 0.5) <= 3 * np.sqrt(0.25 / x.size)


@pytest.mark.parametrize("order,a,b", [(-1.0, 1.0, 1.0), (2.3, 0.1, 5.0), (-3.5, 8.0, 0.02), (0.5, 2.0, 3.0), (0.0, 1e-3, 1e-3)])
def test_gig_matches_scipy_law(order, a, b):
    # scipy's geninvgauss(p, c) has density ∝ x^(p-1) exp(-c (x + 1/x) / 2)
    x = sample_gig(order, a, b, RngStream(12), size=50_000)
    law = stats.geninvgauss(order, np.sqrt(a * b), scale=np.sqrt(b / a))
    assert stats.kstest(x, law.cdf).pvalue > 0.01


def test_gig_vectorized_parameters():
    x = sample_gig(np.array([-1.0, 0.7]), np.array([1.0, 2.0]), 3.0, RngStream(13))
    assert x.shape == (2,) and np.all(x > 0)


def test_gig_rejects_bad_parameters():
    with pytest.raises(ValueError):
        sample_gig(-1.0, 0.0, 1.0, RngStream(0))


def test_tilted_gamma_mean_by_quadrature():
    shape, rate, var = 4.0, 1.5, 0.8
    f = lambda t: t ** (shape - 1) * np.exp(-rate * t - t * t / (2 * var))
    z = integrate.quad(f, 0, np.inf)[0]
    mean = integrate.quad(lambda t: t * f(t), 0, np.inf)[0] / z
    x = sample_tilted_gamma(np.full(200_000, shape), rate, var, RngStream(14))
    assert abs(x.mean() - mean) <= 3 * x.std() / np.sqrt(x.size)


def test_mvn_independent_columns():
    x = sample_mvn_zero(np.eye(3), 100_000, RngStream(15))
    r = np.corrcoef(x.T)
    assert np.abs(r[np.triu_indices(3, 1)]).max() < 0.02


def test_mvn_correlation():
    x = sample_mvn_zero([[1.0, 0.5], [0.5, 1.0]], 100_000, RngStream(16))
    assert abs(np.corrcoef(x.T)[0, 1] - 0.5) < 0.01


def test_mvn_empty():
    x = sample_mvn_zero(np.eye(4), 0, RngStream(17))
    assert x.shape == (0, 4)
