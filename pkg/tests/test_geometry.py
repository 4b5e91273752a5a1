"""Model spaces, curvature, integral criteria, polar coefficients."""

import numpy as np
import pytest

from kbmlab.errors import DomainError, ParameterError, StateError
from kbmlab.geometry import (
    curvature,
    integrability_report,
    model_space,
    polar_coefficients,
)
from kbmlab.kbm import PolarState

ALL_MODELS = [
    ("euclidean", {}),
    ("hyperbolic", {}),
    ("polynomial", {"beta": 3.0}),
    ("polynomial", {"beta": 1.5}),
    ("subexponential", {"beta": 0.5}),
    ("exponential", {"c": 1.0}),
]


def fd_first(f, r, h):
    # 4th-order centered stencil
    return (-f(r + 2 * h) + 8 * f(r + h) - 8 * f(r - h) + f(r - 2 * h)) / (12 * h)


def fd_second(f, r, h):
    return (
        -f(r + 2 * h) + 16 * f(r + h) - 30 * f(r) + 16 * f(r - h) - f(r - 2 * h)
    ) / (12 * h * h)


@pytest.mark.parametrize("name,kw", ALL_MODELS)
def test_derivatives_match_finite_differences(name, kw):
    m = model_space(name, **kw)
    for r in [0.3, 0.7, 1.3, 2.0, 5.0]:
        h = 1e-3 * max(1.0, r)
        fp = fd_first(m.f, r, h)
        fpp = fd_second(m.f, r, h)
        assert abs(fp - m.f_prime(r)) <= 1e-6 * max(abs(fp), 1.0)
        assert abs(fpp - m.f_second(r)) <= 1e-6 * max(abs(fpp), 1.0)


@pytest.mark.parametrize("name,kw", ALL_MODELS)
def test_warp_positive_and_blend_boundary(name, kw):
    m = model_space(name, **kw)
    r = np.geomspace(1e-6, 50, 400)
    assert np.all(m.f(r) > 0)
    if name in ("euclidean", "hyperbolic", "polynomial", "subexponential"):
        # f(0) = 0, f'(0) = 1 for the families anchored at the origin
        eps = 1e-8
        assert m.f(eps) == pytest.approx(eps, rel=1e-4)


def test_curvature_examples():
    assert curvature(model_space("euclidean"), 2.0).K == pytest.approx(0.0, abs=1e-12)
    assert curvature(model_space("hyperbolic"), 1.0).K == pytest.approx(-1.0, rel=1e-12)
    assert curvature(model_space("hyperbolic"), 0.7).K == pytest.approx(-1.0, rel=1e-12)
    # K = -beta(beta-1)/r^2 at r = 2, beta = 3
    assert curvature(model_space("polynomial", beta=3.0), 2.0).K == pytest.approx(-1.5, rel=1e-12)
    c = curvature(model_space("exponential", c=1.0), 5.0)
    assert c.log_derivative == pytest.approx(1.0, rel=1e-12)
    assert c.K == pytest.approx(-1.0, rel=1e-12)
    assert curvature(model_space("euclidean"), 4.0).log_derivative == pytest.approx(0.25)
    assert model_space("hyperbolic").warp(1.0) == pytest.approx(np.sinh(1.0))


def test_curvature_matches_fd_on_log_grid():
    for name, kw in ALL_MODELS:
        m = model_space(name, **kw)
        for r in np.geomspace(0.5, 20.0, 12):
            h = 1e-3 * max(1.0, r)
            k_fd = -fd_second(m.f, r, h) / m.f(r)
            assert abs(m.radial_curvature(r) - k_fd) <= 1e-5 * max(abs(k_fd), 1.0)


def test_log_derivative_monotone_for_log_concave_models():
    # the polynomial family is log-concave on its exact branch r >= 1; the
    # origin blend is a C^2 completion and exempt
    cases = [
        ("euclidean", {}, 0.2),
        ("hyperbolic", {}, 0.2),
        ("polynomial", {"beta": 3.0}, 1.0),
        ("polynomial", {"beta": 1.5}, 1.0),
    ]
    for name, kw, r_lo in cases:
        grid = np.geomspace(r_lo, 30.0, 200)
        lam = model_space(name, **kw).log_derivative(grid)
        assert np.all(np.diff(lam) <= 1e-12)


def test_domain_guard():
    m = model_space("euclidean")
    with pytest.raises(DomainError):
        m.warp(1e-12)
    with pytest.raises(DomainError):
        curvature(m, 0.0)


def test_parameter_errors():
    with pytest.raises(ParameterError):
        model_space("polynomial", beta=-1.0)
    with pytest.raises(ParameterError):
        model_space("exponential", c=0.0)
    with pytest.raises(ParameterError):
        model_space("lorentzian")
    with pytest.raises(ParameterError):
        integrability_report(model_space("euclidean"), 2)
    with pytest.raises(ParameterError):
        integrability_report(model_space("euclidean"), 3, r_max=5.0)


def test_integrability_beta_threshold_table():
    # polynomial warp at d = 3: transience iff beta(d-1) > 1, angle iff beta > 2
    for beta in [0.3, 0.45, 0.6, 1.0, 1.5, 1.9, 2.1, 3.0]:
        rep = integrability_report(model_space("polynomial", beta=beta), 3)
        assert rep.radial_transient is (beta * 2 > 1.0)
        assert rep.angle_converges is (beta > 2.0)
        assert rep.verdicts == (rep.radial_transient, rep.angle_converges)


def test_integrability_values_and_flags():
    rep = integrability_report(model_space("euclidean"), 3)
    # int_1^inf r^-2 = 1
    assert rep.transience_integral == pytest.approx(1.0, rel=1e-3)
    assert rep.radial_transient
    assert not rep.angle_converges
    assert np.isinf(rep.angle_integral)

    rep = integrability_report(model_space("polynomial", beta=1.5), 3)
    assert not rep.angle_converges

    for name, kw in [("hyperbolic", {}), ("exponential", {"c": 1.0}),
                     ("subexponential", {"beta": 0.5})]:
        rep = integrability_report(model_space(name, **kw), 3)
        assert rep.radial_transient and rep.angle_converges
        assert np.isfinite(rep.transience_integral)
        assert np.isfinite(rep.angle_integral)
    # hyperbolic transience integral: int_1^inf sinh^-2 = coth(1) - 1
    rep = integrability_report(model_space("hyperbolic"), 3)
    assert rep.transience_integral == pytest.approx(1.0 / np.tanh(1.0) - 1.0, rel=1e-3)


def _state(rdot, d=3):
    theta = np.zeros(d)
    theta[0] = 1.0
    v = np.zeros(d)
    v[1] = 1.0
    return PolarState(r=1.0, rdot=rdot, theta=theta, v=v)


def test_polar_coefficients_examples():
    m = model_space("euclidean")
    pc = polar_coefficients(m, _state(0.0), sigma=1.0, d=3)
    assert pc.rdot_drift == pytest.approx(1.0)

    pc = polar_coefficients(m, _state(1.0), sigma=1.0, d=3)
    assert pc.rdot_noise == 0.0
    pc = polar_coefficients(m, _state(-1.0), sigma=1.0, d=3)
    assert pc.rdot_noise == 0.0

    # independent evaluation of the radial drift at rdot = 0.6 on sinh
    m = model_space("hyperbolic")
    for sigma, d in [(1.0, 3), (0.7, 4)]:
        st = _state(0.6, d=d)
        st.r = 2.0
        pc = polar_coefficients(m, st, sigma=sigma, d=d)
        want = (np.cosh(2.0) / np.sinh(2.0)) * (1 - 0.36) - 0.5 * sigma**2 * (d - 1) * 0.6
        assert pc.rdot_drift == pytest.approx(want, rel=1e-12)


def test_polar_coefficients_structure():
    m = model_space("hyperbolic")
    st = _state(0.3)
    pc = polar_coefficients(m, st, sigma=1.2, d=3)
    # angular noise projector annihilates theta and v and is idempotent
    assert np.allclose(pc.angular_projector @ st.theta, 0.0, atol=1e-14)
    assert np.allclose(pc.angular_projector @ st.v, 0.0, atol=1e-14)
    assert np.allclose(pc.angular_projector @ pc.angular_projector, pc.angular_projector, atol=1e-14)
    # noise scale realizes the 1/(1-rdot^2) covariance
    assert pc.angular_noise_scale**2 == pytest.approx(1.0 / (1 - 0.09))
    assert pc.theta_drift @ st.theta == pytest.approx(0.0, abs=1e-14)
    # raw covariance matrix is symmetric positive semidefinite
    w = np.linalg.eigvalsh(pc.cov_thetadot)
    assert w.min() >= -1e-12


def test_polar_coefficients_state_error():
    with pytest.raises(StateError):
        polar_coefficients(model_space("euclidean"), _state(1.5), 1.0, 3)
