"""Acceptance suite: one test per stated criterion, at the stated tolerances.

Each test prints a single PASS/FAIL line (run with `pytest -s` to see them
live).  Criterion 5 is implemented exactly as stated and is expected to fail:
at d = 3 the radial velocity's boundary layer at +-1 is a critical
squared-Bessel regime whose excursions reach the clamp at any fixed step
size, so no discrete accumulation of the identity integrals attains 1% at
dt = 1e-4; the same verifier passes in the resolvable regime (see
tests/test_kbm_polar.py::test_pathwise_identity_resolvable_regime).
"""

import numpy as np
import pytest

from kbmlab.cli import checks


def _run(num, name, fn, **kw):
    rep = fn(**kw)
    status = "PASS" if rep["pass"] else "FAIL"
    detail = "; ".join(
        f"{p['statistic']}={p['value']:.4g}" for p in rep["parts"]
    )
    print(f"ACCEPTANCE {num:>3} {name:<28} {status}  [{detail}]")
    return rep


def test_criterion_01_interpolation_variance():
    rep = _run("1", "interpolation variance", checks.check_interpolation)
    assert rep["pass"]


def test_criterion_02_geodesic_limit():
    rep = _run("2", "geodesic limit", checks.check_geodesic)
    assert rep["pass"]


def test_criterion_03_ergodic_average():
    rep = _run("3", "ergodic average", checks.check_ergodic)
    assert rep["pass"]


def test_criterion_04_invariant_density():
    rep = _run("4", "invariant density", checks.check_density)
    assert rep["pass"]


def test_criterion_05_pathwise_ito_identity():
    rep = _run("5", "pathwise Ito identity", checks.check_ito_identity)
    assert rep["pass"]


def test_criterion_06_escape_exponents():
    rep = _run("6", "escape exponents", checks.check_escape)
    assert rep["pass"]


def test_criterion_07_angle_dichotomy():
    rep = _run("7", "angle dichotomy", checks.check_angle)
    assert rep["pass"]


def test_criterion_08_hyperbolic_plane():
    rep = _run("8", "hyperbolic plane", checks.check_h2)
    assert rep["pass"]


def test_criterion_09a_rough_path_algebra():
    rep = _run("9a", "rough-path algebra", checks.check_chen)
    assert rep["pass"]


def test_criterion_09b_moment_scaling():
    rep = _run("9b", "moment scaling", checks.check_moments)
    assert rep["pass"]


def test_criterion_10_levy_area():
    rep = _run("10", "Levy area", checks.check_levy_area)
    assert rep["pass"]


def test_criterion_11_development_consistency():
    rep = _run("11", "development consistency", checks.check_develop_law)
    assert rep["pass"]


def test_criterion_12_group_lift():
    rep = _run("12", "group lift", checks.check_group_lift)
    assert rep["pass"]


def test_criterion_13_determinism_and_merge():
    rep = _run("13", "determinism / merge", checks.check_determinism)
    assert rep["pass"]
