"""Tests for the optimization drivers."""

import numpy as np
import pytest

from coxdpd import (
    Dataset,
    ExponentialHazard,
    FitOptions,
    Theta,
    WeibullHazard,
    estimating_function,
    fit_mdpde,
    fit_mle,
    fit_path,
)


def simulated_dataset(seed=41, n=400, beta=(0.8, -0.5), rate=0.7, censor_time=None):
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=float)
    z = rng.normal(size=(n, beta.size))
    t = rng.exponential(1.0, size=n) / (rate * np.exp(z @ beta))
    if censor_time is None:
        return Dataset(time=t, status=np.ones(n), covariates=z)
    c = rng.uniform(0.0, censor_time, size=n)
    return Dataset(
        time=np.minimum(t, c), status=(t <= c).astype(float), covariates=z
    )


def test_mle_matches_closed_form_rate():
    """With no covariates the exponential MLE is (#events)/(total time)."""
    data = Dataset(
        time=np.array([1.0, 2.0, 3.0]),
        status=np.array([1.0, 1.0, 0.0]),
        covariates=np.zeros((3, 0)),
    )
    result = fit_mle(ExponentialHazard(), data)
    assert result.converged
    assert np.isclose(result.theta.gamma[0], 2.0 / 6.0, atol=1e-8)


def test_mle_recovers_simulated_parameters():
    data = simulated_dataset()
    result = fit_mle(ExponentialHazard(), data)
    assert result.converged
    assert np.isclose(result.theta.gamma[0], 0.7, atol=0.1)
    assert np.allclose(result.theta.beta, [0.8, -0.5], atol=0.15)


def test_mdpde_recovers_simulated_parameters():
    data = simulated_dataset()
    result = fit_mdpde(ExponentialHazard(), data, alpha=0.3)
    assert result.converged
    assert np.isclose(result.theta.gamma[0], 0.7, atol=0.12)
    assert np.allclose(result.theta.beta, [0.8, -0.5], atol=0.2)


def test_converged_certificate_uses_estimating_norm():
    """converged=True is backed by the recomputed estimating-function norm."""
    options = FitOptions(gradient_tolerance=1e-8)
    data = simulated_dataset(n=150)
    result = fit_mdpde(ExponentialHazard(), data, alpha=0.3, options=options)
    assert result.converged
    assert result.estimating_norm <= 10 * options.gradient_tolerance
    recomputed = estimating_function(
        ExponentialHazard(), result.theta, data, 0.3, options.quadrature
    )
    assert np.isclose(recomputed.norm, result.estimating_norm, rtol=1e-9, atol=1e-15)


def test_fit_is_deterministic():
    data = simulated_dataset(n=120)
    first = fit_mdpde(ExponentialHazard(), data, alpha=0.2)
    second = fit_mdpde(ExponentialHazard(), data, alpha=0.2)
    assert np.array_equal(first.theta.as_vector, second.theta.as_vector)
    assert first.iterations == second.iterations


def test_warm_and_cold_starts_agree():
    data = simulated_dataset(n=200)
    cold = fit_mdpde(ExponentialHazard(), data, alpha=0.3)
    warm = fit_mdpde(
        ExponentialHazard(),
        data,
        alpha=0.3,
        init=Theta(gamma=np.array([0.7]), beta=np.array([0.8, -0.5])),
    )
    assert cold.converged and warm.converged
    assert np.allclose(cold.theta.as_vector, warm.theta.as_vector, atol=1e-6)


def test_small_alpha_stays_close_to_mle():
    """Fits vary continuously in alpha: neighbors on a fine grid are close,
    and a very small alpha lands near the maximum likelihood estimate.

    Exact continuity at alpha = 0 is not expected: with a finite integration
    window the alpha -> 0+ estimating equation keeps a boundary term that the
    likelihood score does not have, so the MLE comparison is loose while the
    within-positive-alpha comparison is tight.
    """
    data = simulated_dataset(n=200)
    mle = fit_mle(ExponentialHazard(), data)
    near = fit_mdpde(ExponentialHazard(), data, alpha=1e-4)
    assert np.allclose(mle.theta.as_vector, near.theta.as_vector, atol=0.05)
    lo = fit_mdpde(ExponentialHazard(), data, alpha=0.010)
    hi = fit_mdpde(ExponentialHazard(), data, alpha=0.011)
    assert np.allclose(lo.theta.as_vector, hi.theta.as_vector, atol=5e-3)


def test_time_rescaling_equivariance():
    """Scaling every time by c scales the exponential rate by 1/c and leaves
    the regression coefficients unchanged, for the likelihood and beyond."""
    censored = simulated_dataset(n=250, censor_time=25.0)
    uncensored = simulated_dataset(n=250)
    for alpha, data in ((0.0, censored), (0.3, uncensored)):
        scaled = Dataset(
            time=10.0 * data.time,
            status=data.status,
            covariates=data.covariates,
            tau=10.0 * data.tau,
        )
        base = fit_mdpde(ExponentialHazard(), data, alpha=alpha)
        other = fit_mdpde(ExponentialHazard(), scaled, alpha=alpha)
        assert base.converged and other.converged
        assert np.isclose(other.theta.gamma[0], base.theta.gamma[0] / 10.0, rtol=1e-5)
        assert np.allclose(other.theta.beta, base.theta.beta, atol=1e-5)


def test_fit_requires_events():
    data = Dataset(
        time=np.array([1.0, 2.0]),
        status=np.array([0.0, 0.0]),
        covariates=np.zeros((2, 1)),
    )
    with pytest.raises(ValueError):
        fit_mle(ExponentialHazard(), data)


def test_fit_path_order_and_alphas():
    data = simulated_dataset(n=120)
    alphas = (0.0, 0.1, 0.3)
    results = fit_path(ExponentialHazard(), data, alphas)
    assert [r.alpha for r in results] == list(alphas)
    assert all(r.converged for r in results)


def test_fit_path_rejects_bad_grid():
    data = simulated_dataset(n=50)
    with pytest.raises(ValueError):
        fit_path(ExponentialHazard(), data, ())
    with pytest.raises(ValueError):
        fit_path(ExponentialHazard(), data, (0.1, -0.2))


def test_fit_options_validation():
    with pytest.raises(ValueError):
        FitOptions(max_iterations=0)
    with pytest.raises(ValueError):
        FitOptions(gradient_tolerance=0.0)


def test_weibull_fit_recovers_shape():
    rng = np.random.default_rng(42)
    n = 600
    z = rng.normal(size=(n, 1))
    # Weibull with cumulative hazard g1 * t**g2: invert u = g1 t^g2 e^{bz}
    g1, g2, b = 0.8, 1.5, 0.6
    u = rng.exponential(1.0, size=n)
    t = (u / (g1 * np.exp(b * z[:, 0]))) ** (1.0 / g2)
    data = Dataset(time=t, status=np.ones(n), covariates=z)
    result = fit_mle(WeibullHazard(), data)
    assert result.converged
    assert np.isclose(result.theta.gamma[1], g2, atol=0.15)
    assert np.isclose(result.theta.beta[0], b, atol=0.15)


def test_nonconvergence_is_reported_not_raised():
    """A one-iteration budget cannot converge; the result must say so."""
    data = simulated_dataset(n=150)
    options = FitOptions(max_iterations=1, gradient_tolerance=1e-12)
    result = fit_mdpde(ExponentialHazard(), data, alpha=0.3, options=options)
    assert not result.converged
    assert result.message != ""
