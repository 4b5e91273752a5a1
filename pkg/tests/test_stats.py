"""Estimators, accumulators and fit reports."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from kbmlab.errors import InputError, ParameterError, StatisticsError
from kbmlab.stats import (
    EnsembleSummary,
    FitReport,
    ergodic_average,
    escape_fit,
    interpolation_check,
    invariant_density_mu_ell,
    ks_distance,
    ks_two_sample,
)
from kbmlab.kbm.states import Trajectory


def test_summary_merge_equals_union():
    rng = np.random.default_rng(0)
    xs = rng.standard_normal((4, 777, 3)) * np.array([1.0, 2.0, 0.5])
    parts = [EnsembleSummary(3).update(x) for x in xs]
    merged = parts[0]
    for p in parts[1:]:
        merged.merge(p)
    direct = EnsembleSummary(3).update(xs.reshape(-1, 3))
    assert merged.count == direct.count
    for attr in ("mean", "m2", "m3", "m4"):
        a, b = getattr(merged, attr), getattr(direct, attr)
        assert np.abs(a - b).max() <= 1e-10 * max(np.abs(b).max(), 1.0)
    assert np.array_equal(merged.min, direct.min)
    assert np.array_equal(merged.max, direct.max)


def test_summary_histogram_and_moments():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(20000)
    s = EnsembleSummary(1, bin_edges=np.linspace(-4, 4, 33)).update(x)
    assert s.hist.sum() == ((x > -4) & (x < 4)).sum()
    assert s.variance()[0] == pytest.approx(x.var(), rel=1e-12)
    assert s.fourth_moment()[0] == pytest.approx(((x - x.mean()) ** 4).mean(), rel=1e-10)


def test_ks_distance_calibration():
    rng = np.random.default_rng(2)
    n = 10**5
    samples = np.sort(rng.standard_normal(n))
    ks = ks_distance(samples, norm.cdf)
    assert ks <= 1.63 / np.sqrt(n) * 1.5

    # degenerate sample against the uniform law on [0, 1]
    const = np.full(100, 0.25)
    ks = ks_distance(const, lambda x: np.clip(x, 0, 1))
    assert ks >= 0.75 - 1e-12

    with pytest.raises(InputError):
        ks_distance(np.array([1.0, 0.5] * 50), norm.cdf)
    with pytest.raises(StatisticsError):
        ks_distance(np.arange(10.0), norm.cdf)


def test_ks_two_sample_basic():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(4000)
    b = rng.standard_normal(4000)
    assert ks_two_sample(a, b) <= 0.05
    assert ks_two_sample(a, a + 4.0) >= 0.9


def test_invariant_density_family():
    mu = invariant_density_mu_ell(0.0, 1.0, 3)
    assert mu.mean == pytest.approx(0.0, abs=1e-12)
    x = np.linspace(-1, 1, 101)
    assert np.allclose(mu.pdf(x[1:-1]), 0.5, atol=1e-12)

    mu = invariant_density_mu_ell(1.0, 1.0, 3)
    assert mu.mean == pytest.approx(1.0 / np.tanh(2.0) - 0.5, rel=1e-9)

    # normalization to 1e-10 for assorted parameters
    for ell, sigma, d in [(0.0, 1.0, 3), (1.0, 1.0, 3), (2.0, 0.7, 5), (0.5, 2.0, 4)]:
        mu = invariant_density_mu_ell(ell, sigma, d)
        total, _ = quad(mu.pdf, -1, 1, limit=200)
        assert abs(total - 1.0) <= 1e-10
        assert mu.cdf(1.0) == pytest.approx(1.0, abs=1e-9)

    means = [invariant_density_mu_ell(e, 1.0, 3).mean for e in (0.0, 0.5, 1.0, 2.0)]
    assert np.all(np.diff(means) > 0)

    with pytest.raises(ParameterError):
        invariant_density_mu_ell(1.0, 0.0, 3)
    with pytest.raises(ParameterError):
        invariant_density_mu_ell(1.0, 1.0, 2)


def _traj(t, r, rdot=None):
    return Trajectory(
        kind="radial", t=t,
        columns={"r": r, "rdot": np.zeros_like(r) if rdot is None else rdot},
        d=3, dt=float(t[1] - t[0]),
    )


def test_ergodic_average():
    t = np.linspace(0, 10, 1001)
    tr = _traj(t, np.ones_like(t))
    assert ergodic_average(tr, lambda c: np.ones_like(c["r"])) == 1.0
    assert ergodic_average(tr, "r", burn_in=0.5) == 1.0
    with pytest.raises(ParameterError):
        ergodic_average(tr, "r", burn_in=0.95)
    with pytest.raises(StatisticsError):
        ergodic_average(_traj(t[:5], np.ones(5)), "r")


def test_escape_fit_models_and_errors():
    t = np.linspace(1.0, 100.0, 2000)
    tr = _traj(t, 3.0 * t**0.5)
    fit = escape_fit(tr, "power_in_t")
    assert fit.slope == pytest.approx(0.5, abs=1e-9)
    assert fit.residual_rms <= 1e-12
    fit = escape_fit(_traj(t, 0.7 * t), "linear_in_t")
    assert fit.slope == pytest.approx(0.7, abs=1e-9)
    fit = escape_fit(_traj(t, 1.0 + 5 * np.log(t)), "log")
    assert fit.slope == pytest.approx(5.0, abs=1e-6)
    with pytest.raises(StatisticsError):
        escape_fit(_traj(t, np.full_like(t, 2.0)))
    with pytest.raises(ParameterError):
        escape_fit(tr, "cubic")
    with pytest.raises(StatisticsError):
        FitReport(slope=1.0, intercept=0.0, residual_rms=-1.0, ci95_halfwidth=0.1)


def test_interpolation_check_requires_ensemble():
    with pytest.raises(StatisticsError):
        interpolation_check(np.zeros((10, 3)), 3, 1.0)
    rng = np.random.default_rng(4)
    X = rng.standard_normal((5000, 3)) * np.sqrt(2.0 / 3.0)
    rep = interpolation_check(X, 3, 10.0)
    assert abs(rep["variance"].mean() - 2.0 / 3.0) <= 0.03
    assert rep["ks_first_marginal"] <= 0.02
    assert len(rep["off_diagonal"]) == 3
