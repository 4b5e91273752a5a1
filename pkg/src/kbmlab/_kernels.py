"""Tight scalar integration loops, jit-compiled when numba is available.

The kernels consume pre-drawn standard-normal blocks (one value per step and
noise channel, step-major) so results are bit-identical to a pure-python loop
over the same stream.  Metric log-derivatives are inlined per model family;
custom metrics take the generic python path in the calling module.
"""

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


# family codes for inlined log-derivatives
FAM_EUCLIDEAN = 0
FAM_HYPERBOLIC = 1
FAM_BLENDED_POLY = 2
FAM_BLENDED_SUBEXP = 3
FAM_EXPONENTIAL = 4


@njit(cache=True)
def _log_derivative(r, fam, beta, c, qa, qb, qc):
    if fam == FAM_EUCLIDEAN:
        return 1.0 / r
    if fam == FAM_HYPERBOLIC:
        return math.cosh(r) / math.sinh(r)
    if fam == FAM_EXPONENTIAL:
        return c
    if r < 1.0:
        # blended region: f = r * exp(q), q quintic
        qp = r * r * (3.0 * qa + r * (4.0 * qb + r * 5.0 * qc))
        return 1.0 / r + qp
    if fam == FAM_BLENDED_POLY:
        return beta / r
    return beta * r ** (beta - 1.0)


@njit(cache=True)
def radial_chunk(
    state,
    accum,
    noise,
    dt,
    sigma,
    d,
    fam,
    beta,
    c,
    qa,
    qb,
    qc,
    domain_min,
    clamp_eps,
    stride,
    step0,
    out,
    with_clocks,
):
    """Integrate (r, rdot) over one noise chunk.

    state  : [r, rdot], updated in place
    accum  : [C, D, I1, I2, K2, min_one_minus, prev_alpha, prev_dint]
             running clocks (trapezoid), pathwise-identity integrals
             I1 = sum x^2/(1-x^2) dt, I2 = sum x/sqrt(1-x^2) dB,
             K2 = sum (1+x^2)/(1-x^2) dB^2 (quadratic-variation quadrature),
             and the minimum of 1 - rdot^2 seen at any step
    out    : (n_rec, 7) rows [r, rdot, C, D, I1, I2, K2] written at
             global steps that are multiples of stride
    Returns (exit_step, n_written); exit_step >= 0 flags r <= domain_min.
    """
    r = state[0]
    rdot = state[1]
    s2 = sigma * sigma
    half_damp = 0.5 * s2 * (d - 1)
    n_written = 0
    for i in range(noise.shape[0]):
        one_minus = 1.0 - rdot * rdot
        lam = _log_derivative(r, fam, beta, c, qa, qb, qc)
        db = noise[i] * math.sqrt(dt)
        new_rdot = rdot + (lam * one_minus - half_damp * rdot) * dt + sigma * math.sqrt(one_minus) * db
        if new_rdot > 1.0 - clamp_eps:
            new_rdot = 1.0 - clamp_eps
        elif new_rdot < -1.0 + clamp_eps:
            new_rdot = -1.0 + clamp_eps
        new_r = r + rdot * dt

        # identity integrals; K2 integrates against the realized dB^2
        if one_minus > 1e-14:
            g = rdot / math.sqrt(one_minus)
            accum[2] += rdot * rdot / one_minus * dt
            accum[3] += g * db
            accum[4] += (1.0 + rdot * rdot) / one_minus * db * db

        new_one_minus = 1.0 - new_rdot * new_rdot
        alpha_new = 0.0
        if with_clocks:
            if fam == FAM_EUCLIDEAN:
                f_new = new_r
            elif fam == FAM_HYPERBOLIC:
                f_new = math.sinh(new_r)
            elif fam == FAM_EXPONENTIAL:
                f_new = math.exp(c * new_r)
            elif new_r < 1.0:
                q = new_r**3 * (qa + new_r * (qb + new_r * qc))
                f_new = new_r * math.exp(q)
            elif fam == FAM_BLENDED_POLY:
                f_new = new_r**beta
            else:
                f_new = math.exp(new_r**beta)
            alpha_new = math.sqrt(new_one_minus) / f_new
        dint_new = s2 * new_one_minus
        accum[0] += 0.5 * (accum[6] + alpha_new) * dt
        accum[1] += 0.5 * (accum[7] + dint_new) * dt
        accum[6] = alpha_new
        accum[7] = dint_new
        if new_one_minus < accum[5]:
            accum[5] = new_one_minus

        r = new_r
        rdot = new_rdot
        if r <= domain_min:
            state[0] = r
            state[1] = rdot
            return step0 + i + 1, n_written
        gstep = step0 + i + 1
        if gstep % stride == 0:
            out[n_written, 0] = r
            out[n_written, 1] = rdot
            out[n_written, 2] = accum[0]
            out[n_written, 3] = accum[1]
            out[n_written, 4] = accum[2]
            out[n_written, 5] = accum[3]
            out[n_written, 6] = accum[4]
            n_written += 1
    state[0] = r
    state[1] = rdot
    return -1, n_written


@njit(cache=True)
def hyperbolic_chunk(state, noise, dt, sigma, stride, step0, out):
    """Integrate the half-plane system in (x, log y, w, u) coordinates.

    w = xdot/y and u = ydot/y live on the unit circle (arc-length constraint);
    log-y coordinates keep the exponential decay of y representable.
    out rows: [x, h, w, u]; returns n_written.
    """
    x = state[0]
    h = state[1]
    w = state[2]
    u = state[3]
    half_s2 = 0.5 * sigma * sigma
    n_written = 0
    for i in range(noise.shape[0]):
        db = noise[i] * math.sqrt(dt)
        nw = w + (w * u - half_s2 * w) * dt + sigma * u * db
        nu = u + (-w * w - half_s2 * u) * dt - sigma * w * db
        norm = math.sqrt(nw * nw + nu * nu)
        nw /= norm
        nu /= norm
        x += w * math.exp(h) * dt
        h += u * dt
        w = nw
        u = nu
        gstep = step0 + i + 1
        if gstep % stride == 0:
            out[n_written, 0] = x
            out[n_written, 1] = h
            out[n_written, 2] = w
            out[n_written, 3] = u
            n_written += 1
    state[0] = x
    state[1] = h
    state[2] = w
    state[3] = u
    return n_written


@njit(cache=True)
def bessel_chunk(state, noise, dt, dim, stride, step0, out):
    """Euler steps of a Bessel process of the given dimension.

    dv = (dim-1)/2 / v dt + dB; v is kept strictly positive by a floor,
    which for dim >= 2 is touched only through discretization overshoot.
    """
    v = state[0]
    a = 0.5 * (dim - 1.0)
    n_written = 0
    for i in range(noise.shape[0]):
        v = v + a / v * dt + noise[i] * math.sqrt(dt)
        if v < 1e-12:
            v = 1e-12
        gstep = step0 + i + 1
        if gstep % stride == 0:
            out[n_written] = v
            n_written += 1
    state[0] = v
    return n_written


def metric_family_params(metric):
    """Map a model-space metric to kernel parameters, or None if custom."""
    tag = metric.tag
    if tag == "euclidean":
        return FAM_EUCLIDEAN, 0.0, 0.0, 0.0, 0.0, 0.0
    if tag == "hyperbolic":
        return FAM_HYPERBOLIC, 0.0, 0.0, 0.0, 0.0, 0.0
    if tag == "exponential":
        return FAM_EXPONENTIAL, 0.0, metric.params["c"], 0.0, 0.0, 0.0
    if tag in ("polynomial", "subexponential"):
        fam = FAM_BLENDED_POLY if tag == "polynomial" else FAM_BLENDED_SUBEXP
        beta = metric.params["beta"]
        # recover the blend coefficients from the constructor's recipe
        from .geometry import _quintic_blend_coeffs

        if tag == "polynomial":
            F, Fp, Fpp = 1.0, beta, beta * (beta - 1.0)
        else:
            F = math.exp(1.0)
            Fp = beta * F
            Fpp = (beta * (beta - 1.0) + beta * beta) * F
        lam = Fp / F
        qa, qb, qc = _quintic_blend_coeffs(
            math.log(F), lam - 1.0, Fpp / F - lam * lam + 1.0
        )
        return fam, beta, 0.0, qa, qb, qc
    return None
