"""Flat-space kinetic Brownian motion: unit-speed path with spherical velocity.

The velocity solves d xdot = -sigma^2 (d-1)/2 xdot dt + sigma (I - xdot xdot^T) dW
and is renormalized to the unit sphere after every step; the position
integrates the velocity.  Ensembles are stepped as batches with one noise
stream per path.
"""

import numpy as np

from ..errors import ParameterError, RangeError
from ..sde_core import NoiseStream, StepScheme, draw_blocks, normalize_rows
from .states import Trajectory, config_fingerprint

__all__ = [
    "simulate_euclidean",
    "simulate_euclidean_ensemble",
    "rescale_interpolation",
    "rescale_ensemble",
    "EuclideanEnsemble",
]

NOISE_CHUNK = 1024


class EuclideanEnsemble:
    """Stacked recordings of a batch of flat-space paths."""

    def __init__(self, t, x, xdot, d, dt, seed, path_indices, fingerprint):
        self.t = t
        self.x = x
        self.xdot = xdot
        self.d = d
        self.dt = dt
        self.seed = seed
        self.path_indices = path_indices
        self.fingerprint = fingerprint

    @property
    def n_paths(self):
        return self.x.shape[0]

    def trajectory(self, k):
        cols = {}
        for i in range(self.d):
            cols[f"x_{i + 1}"] = self.x[k, :, i]
            cols[f"xdot_{i + 1}"] = self.xdot[k, :, i]
        return Trajectory(
            kind="euclidean",
            t=self.t,
            columns=cols,
            d=self.d,
            dt=self.dt,
            seed=self.seed,
            path_index=int(self.path_indices[k]),
            fingerprint=self.fingerprint,
        )

    def trajectories(self):
        return [self.trajectory(k) for k in range(self.n_paths)]


def _default_initials(d, n):
    x0 = np.zeros((n, d))
    xdot0 = np.zeros((n, d))
    xdot0[:, 0] = 1.0
    return x0, xdot0


def _integrate(d, sigma, T, scheme, streams, x0, xdot0, record_stride):
    dt = scheme.dt
    n_steps = int(round(T / dt))
    n = x0.shape[0]
    n_rec = n_steps // record_stride + 1
    t_rec = np.arange(n_rec) * (dt * record_stride)

    x = x0.copy()
    v = normalize_rows(xdot0.copy())
    x_rec = np.empty((n, n_rec, d))
    v_rec = np.empty((n, n_rec, d))
    x_rec[:, 0] = x
    v_rec[:, 0] = v

    damp = 0.5 * sigma * sigma * (d - 1)
    heun = scheme.kind == "stratonovich_heun_project"
    written = 1
    step = 0
    while step < n_steps:
        chunk = min(NOISE_CHUNK, n_steps - step)
        dz = draw_blocks(streams, chunk, d) * np.sqrt(dt)
        for i in range(chunk):
            dw = dz[:, i, :]
            if heun:
                # predictor-corrector on the Stratonovich form dv = sigma P(v) o dW
                kick0 = sigma * (dw - np.sum(v * dw, axis=1, keepdims=True) * v)
                v_pred = v + kick0
                kick1 = sigma * (
                    dw - np.sum(v_pred * dw, axis=1, keepdims=True) * v_pred
                )
                x = x + 0.5 * (v + normalize_rows(v_pred)) * dt
                v = v + 0.5 * (kick0 + kick1)
            else:
                kick = sigma * (dw - np.sum(v * dw, axis=1, keepdims=True) * v)
                x = x + v * dt
                v = v + kick - damp * v * dt
            v = normalize_rows(v)
            step += 1
            if step % record_stride == 0:
                x_rec[:, written] = x
                v_rec[:, written] = v
                written += 1
    return t_rec, x_rec, v_rec


def simulate_euclidean(
    d, sigma, T, scheme=None, stream=None, x0=None, xdot0=None, record_stride=1
):
    """Simulate one flat-space path; returns a Trajectory.

    With sigma = 0 the path is the straight line x0 + t*xdot0.
    """
    if d < 2:
        raise ParameterError("flat-space simulator needs d >= 2")
    if sigma < 0:
        raise ParameterError("sigma must be >= 0")
    scheme = scheme or StepScheme()
    stream = stream or NoiseStream(0, 0)
    xi, vi = _default_initials(d, 1)
    if x0 is not None:
        xi = np.asarray(x0, dtype=float).reshape(1, d)
    if xdot0 is not None:
        vi = np.asarray(xdot0, dtype=float).reshape(1, d)
    fp = config_fingerprint(
        {"kind": "euclidean", "d": d, "sigma": sigma, "T": T, "dt": scheme.dt,
         "scheme": scheme.kind, "seed": stream.seed, "path": stream.path_index}
    )
    t, x, v = _integrate(d, sigma, T, scheme, [stream], xi, vi, record_stride)
    ens = EuclideanEnsemble(t, x, v, d, scheme.dt, stream.seed, [stream.path_index], fp)
    return ens.trajectory(0)


def simulate_euclidean_ensemble(
    d,
    sigma,
    T,
    scheme,
    seed,
    paths,
    x0=None,
    xdot0=None,
    record_stride=1,
    path_offset=0,
):
    """Simulate `paths` independent flat-space paths as one stacked batch."""
    if d < 2:
        raise ParameterError("flat-space simulator needs d >= 2")
    streams = [NoiseStream(seed, path_offset + k) for k in range(paths)]
    xi, vi = _default_initials(d, paths)
    if x0 is not None:
        xi = np.broadcast_to(np.asarray(x0, dtype=float), (paths, d)).copy()
    if xdot0 is not None:
        vi = np.broadcast_to(np.asarray(xdot0, dtype=float), (paths, d)).copy()
    fp = config_fingerprint(
        {"kind": "euclidean", "d": d, "sigma": sigma, "T": T, "dt": scheme.dt,
         "scheme": scheme.kind, "seed": seed, "paths": paths, "offset": path_offset}
    )
    t, x, v = _integrate(d, sigma, T, scheme, streams, xi, vi, record_stride)
    return EuclideanEnsemble(
        t, x, v, d, scheme.dt, seed, list(range(path_offset, path_offset + paths)), fp
    )


def _rescaled_positions(t, x, sigma, grid=None):
    """x sampled at sigma^2 * s for s on the rescaled grid in [0, 1]."""
    horizon = sigma * sigma
    if t[-1] < horizon - 1e-12:
        raise RangeError(
            f"trajectory horizon {t[-1]} shorter than sigma^2 = {horizon}"
        )
    dt_rec = t[1] - t[0]
    if grid is None:
        n_out = int(np.floor(horizon / dt_rec + 1e-9)) + 1
        grid = np.arange(n_out) * (dt_rec / horizon)
    src = grid * horizon
    idx_f = src / dt_rec
    idx = np.round(idx_f).astype(int)
    exact = np.max(np.abs(idx_f - idx)) < 1e-9
    if exact:
        out = x[..., idx, :]
    else:
        lo = np.clip(np.floor(idx_f).astype(int), 0, x.shape[-2] - 1)
        hi = np.clip(lo + 1, 0, x.shape[-2] - 1)
        w = (idx_f - lo)[..., None]
        out = (1.0 - w) * x[..., lo, :] + w * x[..., hi, :]
    return grid, out


def rescale_interpolation(traj, sigma):
    """Time-rescaled path X_s = x(sigma^2 s), s in [0, 1], as a Trajectory.

    Uses pure index re-mapping when sigma^2 is a multiple of the recording
    step, linear interpolation between recorded samples otherwise.
    """
    if traj.kind != "euclidean":
        raise ParameterError("rescaling applies to flat-space trajectories")
    d = traj.d
    x = traj.stack([f"x_{i}" for i in range(1, d + 1)])[None, :, :]
    grid, out = _rescaled_positions(traj.t, x, sigma)
    xd = traj.stack([f"xdot_{i}" for i in range(1, d + 1)])[None, :, :]
    _, outv = _rescaled_positions(traj.t, xd, sigma, grid=grid)
    cols = {}
    for i in range(d):
        cols[f"x_{i + 1}"] = out[0, :, i]
        cols[f"xdot_{i + 1}"] = outv[0, :, i]
    return Trajectory(
        kind="euclidean",
        t=grid,
        columns=cols,
        d=d,
        dt=float(grid[1] - grid[0]) if len(grid) > 1 else traj.dt,
        seed=traj.seed,
        path_index=traj.path_index,
        fingerprint=traj.fingerprint,
        meta={"rescaled_sigma": sigma},
    )


def rescale_ensemble(ens, sigma, grid=None):
    """Rescaled positions for a whole batch: (grid, X) with X of shape (n, m, d)."""
    return _rescaled_positions(ens.t, ens.x, sigma, grid=grid)
