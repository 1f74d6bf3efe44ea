import numpy as np
import pytest

from nearcrit.stats import Estimate, binomial_estimate, fit_exponent, mean_estimate


def test_exact_power_law_recovered():
    xs = [2.0, 4.0, 8.0, 16.0, 32.0]
    pts = [(x, 3.0 * x ** -1.25, 0.0) for x in xs]
    fit = fit_exponent(pts)
    assert np.isclose(fit.slope, -1.25)
    assert np.isclose(fit.intercept, np.log(3.0))
    assert np.isclose(fit.r_squared, 1.0)
    assert fit.slope_stderr < 1e-10


def test_too_few_points_rejected():
    with pytest.raises(ValueError):
        fit_exponent([(1.0, 1.0, 0.1), (2.0, 0.5, 0.1)])


def test_nonpositive_rejected():
    with pytest.raises(ValueError):
        fit_exponent([(1.0, 1.0, 0.1), (2.0, -0.5, 0.1), (3.0, 0.2, 0.1)])
    with pytest.raises(ValueError):
        fit_exponent([(0.0, 1.0, 0.1), (2.0, 0.5, 0.1), (3.0, 0.2, 0.1)])


def test_noisy_recovery_within_two_stderr():
    rng = np.random.default_rng(12345)
    xs = np.geomspace(4, 256, 8)
    slope_true = -1.25
    pts = []
    for x in xs:
        y = 2.0 * x ** slope_true * np.exp(rng.normal(0, 0.05))
        pts.append((x, y, 0.05 * y))
    fit = fit_exponent(pts)
    assert abs(fit.slope - slope_true) <= 2 * fit.slope_stderr + 1e-12


def test_mean_estimate_invariants():
    vals = np.array([1.0, 2.0, 3.0, 4.0])
    est = mean_estimate(vals)
    assert est.mean == 2.5
    assert np.isclose(est.stderr, vals.std(ddof=1) / 2.0)
    assert est.n_samples == 4
    with pytest.raises(ValueError):
        mean_estimate(np.empty(0))


def test_binomial_estimate():
    est = binomial_estimate(25, 100)
    assert est.mean == 0.25
    assert np.isclose(est.stderr, np.sqrt(0.25 * 0.75 / 100))


def test_agrees_with():
    assert Estimate(0.5, 0.01, 100).agrees_with(0.52)
    assert not Estimate(0.5, 0.01, 100).agrees_with(0.54)
