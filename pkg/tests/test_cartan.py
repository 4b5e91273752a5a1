"""Development, anti-development and the rough-driver variant."""

import numpy as np
import pytest

from kbmlab.errors import StateError
from kbmlab.geometry import model_space
from kbmlab.sde_core import NoiseStream, StepScheme
from kbmlab.kbm import simulate_euclidean_ensemble
from kbmlab.cartan import (
    antidevelop,
    develop,
    develop_batch,
    develop_rough,
    flat_chart_to_ambient,
    frame_from_polar_velocity,
    frame_to_ambient,
    radial_frame,
)
from kbmlab.roughpath import brownian_rough_ensemble, lift_level2
from kbmlab.stats import ks_two_sample


def _theta0(d=3):
    th = np.zeros(d)
    th[0] = 1.0
    return th


def test_radial_frame_orthonormal():
    for name, kw in [("euclidean", {}), ("hyperbolic", {}), ("polynomial", {"beta": 3.0})]:
        m = model_space(name, **kw)
        fr = radial_frame(m, 2.5, _theta0())
        fr.validate(m)


def test_frame_validation_catches_bad_gram():
    m = model_space("hyperbolic")
    fr = radial_frame(m, 2.0, _theta0())
    fr.a = fr.a * 1.1
    with pytest.raises(StateError):
        fr.validate(m)


def test_radial_driver_gives_radial_geodesic():
    m = model_space("hyperbolic")
    fr = radial_frame(m, 2.0, _theta0())
    t = np.linspace(0, 1.5, 1501)
    driver = np.zeros((len(t), 3))
    driver[:, 0] = t
    dev = develop(m, fr, driver, t=t)
    assert dev.r[0, -1] == pytest.approx(3.5, abs=1e-9)
    assert np.abs(dev.theta[0] - dev.theta[0, 0]).max() <= 1e-12
    assert dev.max_speed_defect <= 1e-9


def test_flat_chart_development_is_isometry():
    """For f = r the chart is isometric to flat space minus a point: the
    development of a smooth driver equals the driver mapped by the initial
    frame isometry, to O(dt)."""
    m = model_space("euclidean")
    fr = radial_frame(m, 3.0, _theta0())
    errs = []
    for n in (400, 800):
        t = np.linspace(0.0, 2.0, n + 1)
        driver = np.stack([np.sin(t), 1 - np.cos(t), 0.3 * t], axis=1)
        dev = develop(m, fr, driver, t=t)
        got = flat_chart_to_ambient(dev.r[0], dev.theta[0])
        U = frame_to_ambient(fr)
        want = flat_chart_to_ambient(3.0, _theta0()) + driver @ U.T
        errs.append(np.abs(got - want).max())
    assert errs[1] <= 5e-3
    assert errs[1] <= 0.7 * errs[0]  # shrinks with the step


def test_roundtrip_develop_antidevelop():
    m = model_space("hyperbolic")
    fr = radial_frame(m, 2.0, _theta0())
    rng = np.random.default_rng(9)
    incr = rng.standard_normal((500, 3)) * 0.005
    driver = np.concatenate([np.zeros((1, 3)), np.cumsum(incr, axis=0)])
    t = np.linspace(0.0, 1.0, 501)
    dev = develop(m, fr, driver, t=t)
    back = antidevelop(m, dev.r[0], dev.theta[0], fr, t=t)
    dt = t[1] - t[0]
    assert np.abs(back - driver).max() <= 10 * dt


def test_circle_antidevelopment_preserves_circumference():
    """Rolling a constant-speed circle of the flat chart flat again gives a
    closed-form comparison: the anti-development has the same length, and for
    f = r it is a circle of the same circumference."""
    m = model_space("euclidean")
    r0 = 2.0
    fr = radial_frame(m, r0, _theta0())
    # constant-speed circle at radius r0 in the plane spanned by theta0, e2
    omega = 1.0 / r0  # unit g-speed: f(r0)|thetadot| = 1
    t = np.linspace(0.0, 2 * np.pi * r0, 4001)
    theta_path = np.column_stack(
        [np.cos(omega * t), np.sin(omega * t), np.zeros_like(t)]
    )
    r_path = np.full_like(t, r0)
    back = antidevelop(m, r_path, theta_path, fr, t=t)
    # closed curve of circumference 2 pi r0: same total length
    seg = np.linalg.norm(np.diff(back, axis=0), axis=1)
    assert seg.sum() == pytest.approx(2 * np.pi * r0, rel=1e-5)
    # rolling a flat-space circle without slipping returns to the start
    assert np.linalg.norm(back[-1] - back[0]) <= 1e-2


def test_develop_rough_on_line_and_spiral():
    m = model_space("hyperbolic")
    fr = radial_frame(m, 2.0, _theta0())
    t = np.linspace(0.0, 1.0, 1001)
    line = np.zeros((len(t), 3))
    line[:, 0] = t
    dev_r = develop_rough(m, fr, lift_level2(line, t=t))
    assert dev_r.r[0, -1] == pytest.approx(3.0, abs=1e-6)

    spiral = np.stack([np.sin(t), 1 - np.cos(t), 0.5 * t], axis=1) / np.sqrt(1.25)
    lift = lift_level2(spiral, t=t)
    dev_c = develop_batch(m, fr, spiral[None], t=t)
    dev_r = develop_rough(m, fr, lift)
    assert np.abs(dev_c.r[0] - dev_r.r[0]).max() <= 1e-3
    assert np.abs(dev_c.theta[0] - dev_r.theta[0]).max() <= 1e-3


def test_develop_rough_brownian_law_matches_radial_oracle():
    """Rough development of lifted Brownian motion at speed 4/(d(d-1)) lands
    on the time-changed Riemannian Brownian motion: its radial part solves
    dr = sqrt(s) dW + (s/2)(d-1) f'/f dt with s the speed."""
    d = 3
    speed = 4.0 / (d * (d - 1))
    m = model_space("hyperbolic")
    r0 = 2.0
    fr = radial_frame(m, r0, _theta0())
    n_paths, n_grid = 2000, 250
    lifts = brownian_rough_ensemble(d, n_paths, n_grid, speed, seed=51)
    r_dev = np.empty(n_paths)
    for k, lift in enumerate(lifts):
        r_dev[k] = develop_rough(m, fr, lift).r[0, -1]

    rng = np.random.default_rng(77)
    dt = 1e-3
    r = np.full(n_paths, r0)
    for _ in range(int(1.0 / dt)):
        lam = np.cosh(r) / np.sinh(r)
        r = r + 0.5 * speed * (d - 1) * lam * dt + np.sqrt(speed * dt) * rng.standard_normal(n_paths)
    assert ks_two_sample(r_dev, r) <= 0.07


def test_developed_ensemble_speed_defect_small():
    m = model_space("polynomial", beta=3.0)
    fr = frame_from_polar_velocity(m, 2.0, _theta0(), 0.3, np.array([0.0, 1.0, 0.0]))
    fr.validate(m)
    ens = simulate_euclidean_ensemble(3, 1.0, 1.0, StepScheme(dt=1e-3), 61, 8)
    dev = develop_batch(m, fr, ens.x, t=ens.t, record_stride=100)
    assert dev.max_speed_defect <= 1e-6
    fin = dev.final_frame(0)
    fin.validate(m)
