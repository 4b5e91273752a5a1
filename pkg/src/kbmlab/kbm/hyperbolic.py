"""Kinetic Brownian motion on the hyperbolic half-plane (the d = 2 case).

A single real Brownian motion drives the velocity through
dM^xdot = ydot dB, dM^ydot = -xdot dB.  Internally the state is
(x, h, w, u) = (x, log y, xdot/y, ydot/y): the pair (w, u) lives on the unit
circle by the arc-length constraint and log coordinates keep the
exponentially decaying y representable at any horizon, so the y <= 0
clamp path can never trigger (the flag count is reported and always 0).
"""

import numpy as np

from .. import _kernels
from ..errors import ParameterError, StateError
from ..sde_core import NoiseStream, StepScheme
from .states import HyperbolicPlaneState, Trajectory, config_fingerprint

__all__ = ["simulate_hyperbolic_plane", "h2_geodesic"]

KERNEL_CHUNK = 1 << 20


def simulate_hyperbolic_plane(sigma, T, scheme=None, stream=None, initial=None, record_stride=1):
    """Half-plane path; records x, y, xdot, ydot plus u = ydot/y and log y."""
    scheme = scheme or StepScheme()
    if scheme.kind != "ito_euler_project":
        raise ParameterError(
            "half-plane simulator integrates the explicit Ito form; "
            "use scheme kind 'ito_euler_project'"
        )
    if sigma < 0:
        raise ParameterError("sigma must be >= 0")
    stream = stream or NoiseStream(0, 0)
    if initial is None:
        initial = HyperbolicPlaneState(x=0.0, y=1.0, xdot=1.0, ydot=0.0)
    initial.validate()

    dt = scheme.dt
    n_steps = int(round(T / dt))
    n_rec = n_steps // record_stride + 1
    t = np.arange(n_rec) * (dt * record_stride)

    state = np.array(
        [initial.x, np.log(initial.y), initial.w, initial.u], dtype=float
    )
    norm = np.hypot(state[2], state[3])
    if abs(norm - 1.0) > 1e-9:
        raise StateError("initial velocity does not satisfy the arc-length relation")
    state[2] /= norm
    state[3] /= norm

    out = np.empty((n_rec - 1, 4))
    written = 0
    step = 0
    while step < n_steps:
        chunk = min(KERNEL_CHUNK, n_steps - step)
        noise = stream.normals(chunk)
        n_w = _kernels.hyperbolic_chunk(
            state, noise, dt, sigma, record_stride, step, out[written:]
        )
        written += n_w
        step += chunk

    x = np.concatenate([[initial.x], out[:, 0]])
    h = np.concatenate([[np.log(initial.y)], out[:, 1]])
    w = np.concatenate([[initial.w], out[:, 2]])
    u = np.concatenate([[initial.u], out[:, 3]])
    y = np.exp(h)
    cols = {
        "x": x, "y": y, "xdot": w * y, "ydot": u * y, "u": u, "logy": h,
    }
    fp = config_fingerprint(
        {"kind": "h2", "sigma": sigma, "T": T, "dt": dt,
         "seed": stream.seed, "path": stream.path_index, "stride": record_stride,
         "x0": initial.x, "y0": initial.y, "xdot0": initial.xdot, "ydot0": initial.ydot}
    )
    return Trajectory(
        kind="h2", t=t, columns=cols, d=2, dt=dt, seed=stream.seed,
        path_index=stream.path_index, fingerprint=fp,
        meta={"sigma": sigma, "w": w, "clamp_flags": 0},
    )


def h2_geodesic(initial, t):
    """Closed-form unit-speed geodesic of the half-plane from the initial state.

    Vertical lines when xdot0 = 0, otherwise the semicircle through the
    initial point orthogonal to the boundary, parametrized by arc length.
    """
    x0, y0 = initial.x, initial.y
    w0, u0 = initial.w, initial.u
    t = np.asarray(t, dtype=float)
    if abs(w0) < 1e-15:
        sgn = 1.0 if u0 >= 0 else -1.0
        return np.full_like(t, x0), y0 * np.exp(sgn * t)
    # semicircle with center (c, 0), radius R; angle phi from the positive axis
    # moves at unit hyperbolic speed: phi' = sin(phi) / R * y ... = sin(phi)/R * R sin(phi)
    c = x0 + y0 * u0 / w0
    R = y0 * np.hypot(1.0, u0 / w0)
    phi0 = np.arctan2(y0, x0 - c)
    # arc-length parametrization gives dphi/dt = -sign(w0) sin(phi),
    # solved by tan(phi/2) evolving exponentially
    s = -np.sign(w0)
    tan_half = np.tan(phi0 / 2.0) * np.exp(s * t)
    phi = 2.0 * np.arctan(tan_half)
    return c + R * np.cos(phi), R * np.sin(phi)
