"""Level-2 lift algebra, scaling diagnostics and the step-2 solver."""

import numpy as np
import pytest
from scipy.linalg import expm

from kbmlab.errors import InputError, ParameterError, StatisticsError
from kbmlab.roughpath import (
    brownian_rough_ensemble,
    chen_combine,
    holder_diagnostics,
    lift_level2,
    restrict,
    solve_rde_step2,
)


def test_straight_line_lift():
    v = np.array([0.7, -0.2, 0.4])
    t = np.linspace(0.0, 1.0, 101)
    lift = lift_level2(t[:, None] * v, t=t)
    assert np.allclose(lift.X[-1], v, atol=1e-14)
    assert np.allclose(lift.XX[-1], 0.5 * np.outer(v, v), atol=1e-14)


def test_one_dimensional_antisymmetric_part_vanishes():
    rng = np.random.default_rng(0)
    path = np.cumsum(rng.standard_normal((200, 1)), axis=0)
    lift = lift_level2(path)
    assert abs(lift.antisymmetric()[0, 0]) <= 1e-15


def test_unit_square_levy_area():
    # Green's theorem: the antisymmetric part of the closed counterclockwise
    # unit square equals its signed area
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], dtype=float)
    lift = lift_level2(square, t=np.linspace(0, 1, 5))
    anti = lift.antisymmetric()
    assert anti[0, 1] == pytest.approx(1.0, abs=1e-14)
    assert anti[1, 0] == pytest.approx(-1.0, abs=1e-14)


def test_axis_segments_lift():
    # e1 then e2: XX = 0.5 e1 e1 + 0.5 e2 e2 + e1 (x) e2
    path = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    lift = lift_level2(path, t=np.array([0.0, 0.5, 1.0]))
    want = 0.5 * np.diag([1.0, 1.0])
    want[0, 1] += 1.0
    assert np.allclose(lift.XX[-1], want, atol=1e-15)


def test_chen_combine_identity_and_split():
    from kbmlab.roughpath import Level2Path

    rng = np.random.default_rng(1)
    path = np.cumsum(rng.standard_normal((301, 3)) * 0.1, axis=0)
    t = np.linspace(0.0, 3.0, 301)
    lift = lift_level2(path, t=t)

    # concatenating a zero-length segment is the identity
    empty = Level2Path(t=np.array([t[-1]]), X=np.zeros((1, 3)), XX=np.zeros((1, 3, 3)))
    glued = chen_combine(lift, empty)
    assert np.array_equal(glued.X, lift.X)
    assert np.array_equal(glued.XX, lift.XX)

    # split at an interior grid point and recombine
    for cut in (1, 57, 150, 299):
        a = restrict(lift, 0, cut)
        b = restrict(lift, cut, 300)
        glued = chen_combine(a, b)
        assert np.abs(glued.X - lift.X).max() <= 1e-14
        assert np.abs(glued.XX - lift.XX).max() <= 1e-14

    with pytest.raises(InputError):
        chen_combine(restrict(lift, 0, 100), restrict(lift, 150, 200))


def test_chen_relation_exact_on_random_triples():
    rng = np.random.default_rng(2)
    path = np.cumsum(rng.standard_normal((1001, 2)) * 0.05, axis=0)
    lift = lift_level2(path)
    for _ in range(300):
        i, k, j = np.sort(rng.integers(0, 1001, 3))
        assert lift.chen_defect(i, k, j) <= 1e-12
        assert lift.sym_defect(i, j) <= 1e-12


def test_lift_input_errors():
    with pytest.raises(InputError):
        lift_level2(np.zeros((1, 2)))
    with pytest.raises(InputError):
        lift_level2(np.zeros((5, 2)), t=np.array([0.0, 1.0, 0.5, 2.0, 3.0]))
    with pytest.raises(ParameterError):
        lift_level2(np.zeros((5, 2)), gamma=0.6)


def test_holder_diagnostics_brownian_and_line():
    lifts = brownian_rough_ensemble(2, 128, 512, 1.0, seed=3)
    diag = holder_diagnostics(lifts, q=2)
    assert abs(diag.level1_slope - 1.0) <= 0.1
    assert diag.level2_slope == pytest.approx(2.0, abs=0.3)
    assert np.all(diag.level1_seminorm >= 0)

    v = np.array([1.0, 0.0])
    t = np.linspace(0, 1, 513)
    line = [lift_level2(t[:, None] * v, t=t) for _ in range(120)]
    diag = holder_diagnostics(line, q=4)
    # deterministic line: E|X_ts|^q = |t-s|^q
    assert diag.level1_slope == pytest.approx(4.0, abs=0.05)

    with pytest.raises(ParameterError):
        holder_diagnostics(lifts, q=3)
    with pytest.raises(StatisticsError):
        holder_diagnostics(lifts[:50], q=2)


def test_rde_linear_fields_match_matrix_exponential():
    A1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    A2 = np.array([[0.3, 0.0], [0.0, -0.2]])

    def fields(y):
        return np.column_stack([A1 @ y, A2 @ y])

    t = np.linspace(0.0, 1.0, 1001)
    driver = lift_level2(np.column_stack([np.sin(t), 0.5 * t]), t=t)
    out = solve_rde_step2(fields, driver, np.array([1.0, 2.0]))
    # the two matrices commute with their time-dependent combination only
    # approximately; integrate the exact linear ODE with fine steps instead
    y = np.array([1.0, 2.0])
    for i in range(len(t) - 1):
        dx = driver.X[i + 1] - driver.X[i]
        M = A1 * dx[0] + A2 * dx[1]
        y = expm(M) @ y
    assert np.abs(out[-1] - y).max() <= 1e-6


def test_rde_zero_driver_constant_path():
    def fields(y):
        return np.eye(2)

    t = np.linspace(0, 1, 11)
    driver = lift_level2(np.zeros((11, 2)), t=t)
    out = solve_rde_step2(fields, driver, np.array([3.0, -1.0]))
    assert np.abs(out - out[0]).max() == 0.0


def test_rde_circle_driver_rotation_fields():
    """Driver = lifted circle; fields = rotation generators acting on a frame
    in 3-space; the exact solution composes the corresponding rotations."""
    J1 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    J2 = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])

    def fields(y):
        return np.column_stack([J1 @ y, J2 @ y])

    def deriv(y, a):
        return np.column_stack([J1 @ a, J2 @ a])

    t = np.linspace(0.0, 2 * np.pi, 4001)
    circle = np.column_stack([np.cos(t) - 1.0, np.sin(t)])
    driver = lift_level2(circle, t=t)
    y0 = np.array([1.0, 0.0, 0.0])
    out = solve_rde_step2(fields, driver, y0, field_derivative=deriv)

    y = y0.copy()
    for i in range(len(t) - 1):
        dx = circle[i + 1] - circle[i]
        y = expm(J1 * dx[0] + J2 * dx[1]) @ y
    assert np.abs(out[-1] - y).max() <= 1e-3


def test_rde_substep_refinement():
    A1 = np.array([[0.0, 1.0], [-1.0, 0.0]])

    def fields(y):
        return (A1 @ y)[:, None]

    t = np.linspace(0.0, 1.0, 6)
    driver = lift_level2(np.column_stack([t]), t=t)
    coarse = solve_rde_step2(fields, driver, np.array([1.0, 0.0]), substep=1)
    fine = solve_rde_step2(fields, driver, np.array([1.0, 0.0]), substep=16)
    exact = expm(A1) @ np.array([1.0, 0.0])
    assert np.abs(fine[-1] - exact).max() < np.abs(coarse[-1] - exact).max()


def test_refinement_consistency_of_lift():
    """Lifting at dt and dt/2 differs by O(dt) on smooth paths."""
    def path(tt):
        return np.column_stack([np.sin(tt), np.cos(2 * tt), tt**2])

    diffs = []
    ns = [64, 128, 256, 512]
    for n in ns:
        t1 = np.linspace(0, 1, n + 1)
        t2 = np.linspace(0, 1, 2 * n + 1)
        l1 = lift_level2(path(t1), t=t1)
        l2 = lift_level2(path(t2), t=t2)
        diffs.append(np.abs(l1.XX[-1] - l2.XX[-1]).max())
    slope = np.polyfit(np.log(1.0 / np.asarray(ns)), np.log(diffs), 1)[0]
    assert slope >= 0.9
