"""Flat-space simulator and the time-rescaling map."""

import numpy as np
import pytest

from kbmlab.errors import ParameterError, RangeError
from kbmlab.sde_core import NoiseStream, StepScheme
from kbmlab.kbm import (
    rescale_ensemble,
    rescale_interpolation,
    simulate_euclidean,
    simulate_euclidean_ensemble,
)


def test_zero_noise_is_geodesic():
    tr = simulate_euclidean(3, 0.0, 1.0, StepScheme(dt=1e-3), NoiseStream(0, 0))
    x = tr.stack(["x_1", "x_2", "x_3"])
    want = tr.t[:, None] * np.array([1.0, 0.0, 0.0])
    assert np.abs(x - want).max() <= 1e-12


def test_unit_speed_every_step():
    tr = simulate_euclidean(3, 2.0, 0.05, StepScheme(dt=1e-4), NoiseStream(4, 0))
    x = tr.stack(["x_1", "x_2", "x_3"])
    steps = np.linalg.norm(np.diff(x, axis=0), axis=1)
    assert np.abs(steps - 1e-4).max() <= 1e-12
    v = tr.stack(["xdot_1", "xdot_2", "xdot_3"])
    assert np.abs(np.linalg.norm(v, axis=1) - 1.0).max() <= 1e-12


def test_dimension_guard():
    with pytest.raises(ParameterError):
        simulate_euclidean(1, 1.0, 1.0, StepScheme(dt=1e-3), NoiseStream(0, 0))


def test_rescale_identity_and_index_arithmetic():
    tr = simulate_euclidean(2, 1.0, 1.0, StepScheme(dt=1e-3), NoiseStream(1, 0))
    res = rescale_interpolation(tr, 1.0)
    assert np.array_equal(res.array("x_1"), tr.array("x_1"))

    tr = simulate_euclidean(2, 2.0, 4.0, StepScheme(dt=1e-3), NoiseStream(1, 0))
    res = rescale_interpolation(tr, 2.0)
    i = np.searchsorted(res.t, 0.25)
    j = np.searchsorted(tr.t, 1.0)
    assert res.t[i] == pytest.approx(0.25)
    assert res.array("x_1")[i] == tr.array("x_1")[j]

    with pytest.raises(RangeError):
        rescale_interpolation(tr, 3.0)


def test_rescaled_quadratic_variation():
    # high-noise rescaled path has BM-like quadratic variation d * 4/(d(d-1)) = 2
    # on partitions coarse relative to the velocity correlation time
    # 2/(sigma^4 (d-1)) ~ 2.4e-4 of rescaled time
    sigma, d = 8.0, 3
    T = sigma**2
    n_steps = int(T / 1e-3)
    ens = simulate_euclidean_ensemble(
        d, sigma, T, StepScheme(dt=1e-3), 21, 512, record_stride=n_steps // 64
    )
    grid, X = rescale_ensemble(ens, sigma)
    qv = np.sum(np.diff(X, axis=1) ** 2, axis=(1, 2)).mean()
    assert qv == pytest.approx(2.0, rel=0.10)


def test_scale_consistency_with_unit_speed_representation():
    """x(sigma^2 t) at noise sigma has the law of (1/sigma^2) int_0^{sigma^4 t} y ds
    with y the unit-speed spherical velocity; checked via terminal variances."""
    sigma, t, d, n = 3.0, 0.5, 3, 3000
    ens = simulate_euclidean_ensemble(
        d, sigma, sigma**2 * t, StepScheme(dt=2e-4), 31, n,
        record_stride=int(sigma**2 * t / 2e-4),
    )
    var_direct = ens.x[:, -1, :].var(axis=0, ddof=1).mean()

    T2 = sigma**4 * t
    ens_y = simulate_euclidean_ensemble(
        d, 1.0, T2, StepScheme(dt=2e-3), 32, n, record_stride=5
    )
    # integrate the recorded velocity samples (trapezoid) and rescale
    v = ens_y.xdot
    dt_rec = ens_y.t[1] - ens_y.t[0]
    integral = (v[:, :-1, :] + v[:, 1:, :]).sum(axis=1) * (0.5 * dt_rec)
    var_repr = (integral / sigma**2).var(axis=0, ddof=1).mean()
    assert abs(var_direct / var_repr - 1.0) <= 0.05


def test_trajectory_csv_roundtrip(tmp_path):
    tr = simulate_euclidean(2, 1.0, 0.5, StepScheme(dt=1e-3), NoiseStream(8, 0), record_stride=10)
    p = tmp_path / "traj.csv"
    tr.to_csv(p)
    back = type(tr).from_csv(p, kind="euclidean", d=2)
    assert np.array_equal(back.t, tr.t)
    for name in tr.column_names():
        assert np.array_equal(back.array(name), tr.array(name))
