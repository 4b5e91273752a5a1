"""Rolling without slipping between flat d-space paths and warped-product paths.

A frame at a base point (r, theta) is a g-orthonormal set of d tangent
vectors, each stored as a radial component a_i and an ambient spherical
component w_i tangent to the unit sphere at theta.  Development integrates

    (dr, dtheta) = sum_i dm^i E_i,     E_i parallel along the motion,

with the warped-product transport law

    da_i = f f' <dtheta, w_i>
    dw_i = -<w_i, dtheta> theta - (f'/f) (dr w_i + a_i dtheta),

and the anti-development inverts it by reading the driver increments off the
frame, dm^i = g(velocity, E_i).  Frames are re-orthonormalized under g after
every step (Newton-Schulz polish of the Gram matrix, eigendecomposition
fallback), so round-trips and isometry defects stay at the discretization
order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainExitError, InputError, NumericalError, StateError
from .roughpath import Level2Path, solve_rde_step2

__all__ = [
    "FrameState",
    "DevelopedPath",
    "radial_frame",
    "frame_from_polar_velocity",
    "develop",
    "develop_batch",
    "antidevelop",
    "develop_rough",
    "flat_chart_to_ambient",
    "frame_to_ambient",
]

GRAM_TOL = 1e-8


@dataclass
class FrameState:
    """Base point (r, theta) plus a g-orthonormal frame (a_i, w_i)."""

    r: float
    theta: np.ndarray
    a: np.ndarray  # (d,) radial components, one per frame column
    w: np.ndarray  # (d, d) ambient spherical components, column i is w[:, i]

    @property
    def d(self):
        return self.theta.shape[0]

    def gram(self, metric):
        f2 = float(metric.warp(self.r)) ** 2
        return np.outer(self.a, self.a) + f2 * (self.w.T @ self.w)

    def validate(self, metric):
        if abs(np.linalg.norm(self.theta) - 1.0) > 1e-9:
            raise StateError("theta must be a unit vector")
        if np.abs(self.theta @ self.w).max() > 1e-8:
            raise StateError("spherical frame components must be tangent to the sphere")
        defect = np.abs(self.gram(metric) - np.eye(self.d)).max()
        if defect > GRAM_TOL:
            raise StateError(f"frame Gram defect {defect:.3e} exceeds {GRAM_TOL}")
        return self


def radial_frame(metric, r, theta):
    """Canonical frame: first column radial, the rest tangent axes scaled by 1/f."""
    theta = np.asarray(theta, dtype=float)
    d = theta.shape[0]
    f = float(metric.warp(r))
    a = np.zeros(d)
    a[0] = 1.0
    w = np.zeros((d, d))
    basis = []
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        e -= (e @ theta) * theta
        for b in basis:
            e -= (e @ b) * b
        n = np.linalg.norm(e)
        if n > 1e-8:
            basis.append(e / n)
        if len(basis) == d - 1:
            break
    for i, b in enumerate(basis):
        w[:, i + 1] = b / f
    return FrameState(r=float(r), theta=theta.copy(), a=a, w=w)


def frame_from_polar_velocity(metric, r, theta, rdot, v):
    """Frame whose first column is the unit tangent (rdot, |thetadot| v).

    Developing a driver that starts with velocity e1 through this frame
    reproduces the polar dynamics started from (r, rdot, theta, v).
    """
    theta = np.asarray(theta, dtype=float)
    v = np.asarray(v, dtype=float)
    d = theta.shape[0]
    f = float(metric.warp(r))
    a = np.zeros(d)
    w = np.zeros((d, d))
    a[0] = rdot
    w[:, 0] = np.sqrt(max(1.0 - rdot**2, 0.0)) / f * v
    # complete g-orthonormally from the radial direction and sphere axes
    cand = [(1.0, np.zeros(d))]
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        e -= (e @ theta) * theta
        n = np.linalg.norm(e)
        if n > 1e-8:
            cand.append((0.0, e / (n * f)))
    col = 1
    for ca, cw in cand:
        if col == d:
            break
        # subtract g-projections onto existing columns
        for i in range(col):
            g_ip = ca * a[i] + f * f * (cw @ w[:, i])
            ca -= g_ip * a[i]
            cw = cw - g_ip * w[:, i]
        norm = np.sqrt(ca * ca + f * f * (cw @ cw))
        if norm < 1e-8:
            continue
        a[col] = ca / norm
        w[:, col] = cw / norm
        col += 1
    if col != d:
        raise NumericalError("could not complete a frame from the given velocity")
    return FrameState(r=float(r), theta=theta.copy(), a=a, w=w)


@dataclass
class DevelopedPath:
    """Recorded base path and final (optionally full) frame of a development."""

    t: np.ndarray
    r: np.ndarray          # (n_paths, n_rec)
    theta: np.ndarray      # (n_paths, n_rec, d)
    a: np.ndarray          # final frames (n_paths, d)
    w: np.ndarray          # final frames (n_paths, d, d)
    frames_a: np.ndarray = None  # (n_paths, n_rec, d) when frames recorded
    frames_w: np.ndarray = None
    max_speed_defect: float = 0.0

    def final_frame(self, k=0):
        return FrameState(
            r=float(self.r[k, -1]), theta=self.theta[k, -1].copy(),
            a=self.a[k].copy(), w=self.w[k].copy(),
        )


def _gram_inverse_sqrt(G):
    """Batched G^(-1/2) for Gram matrices near the identity.

    Newton iteration Z <- Z (3I - G Z^2)/2 (all iterates commute with G);
    quadratic convergence reaches round-off in a few passes from the
    one-step drift left by the transport update.
    """
    d = G.shape[-1]
    eye = np.eye(d)
    defect = np.abs(G - eye).max()
    if defect < 0.1:
        Z = 1.5 * eye - 0.5 * G
        for _ in range(5):
            Y = G @ Z @ Z
            err = np.abs(Y - eye).max()
            if err <= 1e-14:
                break
            Z = Z @ (1.5 * eye - 0.5 * Y)
        return Z
    vals, vecs = np.linalg.eigh(G)
    if np.any(vals <= 0):
        raise NumericalError("degenerate frame Gram matrix")
    inv_sqrt = vecs * (vals ** -0.5)[..., None, :]
    return inv_sqrt @ np.swapaxes(vecs, -1, -2)


def _orthonormalize(metric, r, theta, a, w):
    w = w - theta[..., :, None] * np.einsum("...k,...kj->...j", theta, w)[..., None, :]
    f2 = np.asarray(metric.warp(r)) ** 2
    G = np.einsum("...i,...j->...ij", a, a) + f2[..., None, None] * np.einsum(
        "...ki,...kj->...ij", w, w
    )
    S = _gram_inverse_sqrt(G)
    return np.einsum("...i,...ij->...j", a, S), w @ S


def develop_batch(metric, frame0, drivers, t=None, record_stride=None, record_frames=False):
    """Development of a batch of drivers from a shared initial frame.

    drivers: (n_paths, m, d) sampled flat-space paths starting at 0.
    Returns a DevelopedPath; `max_speed_defect` is the largest per-step
    relative mismatch between driver speed and g-speed of the developed path.
    """
    drivers = np.asarray(drivers, dtype=float)
    if drivers.ndim == 2:
        drivers = drivers[None, :, :]
    n, m, d = drivers.shape
    if np.abs(drivers[:, 0, :]).max() > 1e-12:
        raise InputError("drivers must start at the origin")
    if t is None:
        t = np.linspace(0.0, 1.0, m)
    record_stride = record_stride or 1
    rec_idx = np.arange(0, m, record_stride)
    if rec_idx[-1] != m - 1:
        rec_idx = np.concatenate([rec_idx, [m - 1]])
    n_rec = len(rec_idx)

    r = np.full(n, frame0.r, dtype=float)
    theta = np.broadcast_to(frame0.theta, (n, d)).copy()
    a = np.broadcast_to(frame0.a, (n, d)).copy()
    w = np.broadcast_to(frame0.w, (n, d, d)).copy()

    r_rec = np.empty((n, n_rec))
    th_rec = np.empty((n, n_rec, d))
    fa_rec = np.empty((n, n_rec, d)) if record_frames else None
    fw_rec = np.empty((n, n_rec, d, d)) if record_frames else None
    ptr = 0
    if rec_idx[0] == 0:
        r_rec[:, 0] = r
        th_rec[:, 0] = theta
        if record_frames:
            fa_rec[:, 0] = a
            fw_rec[:, 0] = w
        ptr = 1

    max_defect = 0.0
    for s in range(m - 1):
        dm = drivers[:, s + 1, :] - drivers[:, s, :]
        f = np.asarray(metric.warp(r))
        fp = f * np.asarray(metric.log_derivative(r))
        dr = np.einsum("ni,ni->n", a, dm)
        dth = np.einsum("nki,ni->nk", w, dm)

        # g-speed of the motion must match the Euclidean driver speed
        sp2 = dr**2 + f**2 * np.einsum("nk,nk->n", dth, dth)
        dm2 = np.einsum("ni,ni->n", dm, dm)
        mask = dm2 > 0
        if np.any(mask):
            max_defect = max(
                max_defect,
                float(np.abs(np.sqrt(sp2[mask] / dm2[mask]) - 1.0).max()),
            )

        wd = np.einsum("nki,nk->ni", w, dth)  # <w_i, dtheta>
        lam = fp / f
        a_new = a + (f * fp)[:, None] * wd
        w_new = (
            w
            - theta[:, :, None] * wd[:, None, :]
            - lam[:, None, None] * (dr[:, None, None] * w + a[:, None, :] * dth[:, :, None])
        )
        r_new = r + dr
        if np.any(r_new <= metric.domain_min):
            k_bad = int(np.argmax(r_new <= metric.domain_min))
            raise DomainExitError(
                f"developed path {k_bad} left the chart at step {s + 1}",
                exit_time=float(t[s + 1]), path_index=k_bad,
            )
        th_new = theta + dth
        th_new /= np.linalg.norm(th_new, axis=1, keepdims=True)
        a_new, w_new = _orthonormalize(metric, r_new, th_new, a_new, w_new)
        r, theta, a, w = r_new, th_new, a_new, w_new
        if ptr < n_rec and s + 1 == rec_idx[ptr]:
            r_rec[:, ptr] = r
            th_rec[:, ptr] = theta
            if record_frames:
                fa_rec[:, ptr] = a
                fw_rec[:, ptr] = w
            ptr += 1

    return DevelopedPath(
        t=t[rec_idx], r=r_rec, theta=th_rec, a=a, w=w,
        frames_a=fa_rec, frames_w=fw_rec, max_speed_defect=max_defect,
    )


def develop(metric, frame0, driver, t=None, record_frames=True):
    """Development of one sampled driver; returns a DevelopedPath."""
    frame0.validate(metric)
    return develop_batch(
        metric, frame0, np.asarray(driver, dtype=float)[None, :, :], t=t,
        record_frames=record_frames,
    )


def antidevelop(metric, r_path, theta_path, frame0, t=None):
    """Flat-space driver whose development reproduces the given base path."""
    frame0.validate(metric)
    r_path = np.asarray(r_path, dtype=float)
    theta_path = np.asarray(theta_path, dtype=float)
    m, d = theta_path.shape
    a = frame0.a.copy()
    w = frame0.w.copy()
    out = np.zeros((m, d))
    for s in range(m - 1):
        r = r_path[s]
        f = float(metric.warp(r))
        lam = float(metric.log_derivative(r))
        fp = f * lam
        dr = r_path[s + 1] - r_path[s]
        dth = theta_path[s + 1] - theta_path[s]
        # remove the normal component of the sphere increment
        dth = dth - (dth @ theta_path[s]) * theta_path[s]
        dm = dr * a + f * f * (dth @ w)
        out[s + 1] = out[s] + dm
        wd = dth @ w
        a_new = a + f * fp * wd
        w_new = (
            w
            - theta_path[s][:, None] * wd[None, :]
            - lam * (dr * w + np.outer(dth, a))
        )
        a, w = _orthonormalize(
            metric, np.asarray(r_path[s + 1]), theta_path[s + 1], a_new, w_new
        )
    return out


def _pack(r, theta, a, w):
    return np.concatenate([[r], theta, a, w.ravel()])


def _unpack(y, d):
    r = y[0]
    theta = y[1 : 1 + d]
    a = y[1 + d : 1 + 2 * d]
    w = y[1 + 2 * d :].reshape(d, d)
    return r, theta, a, w


def develop_rough(metric, frame0, driver):
    """Development driven by a level-2 rough path via the step-2 Euler solver.

    On lifts of smooth drivers this agrees with `develop` to discretization
    order; the second-level term supplies the curvature correction needed for
    genuinely rough drivers.
    """
    if not isinstance(driver, Level2Path):
        raise InputError("driver must be a Level2Path")
    frame0.validate(metric)
    d = driver.d

    def fields(y):
        r, theta, a, w = _unpack(y, d)
        f = float(metric.warp(max(r, metric.domain_min)))
        lam = float(metric.log_derivative(max(r, metric.domain_min)))
        fp = f * lam
        cols = np.empty((y.size, d))
        for i in range(d):
            dr = a[i]
            dth = w[:, i]
            wd = dth @ w
            da = f * fp * wd
            dw = (
                -theta[:, None] * wd[None, :]
                - lam * (dr * w + np.outer(dth, a))
            )
            cols[:, i] = _pack(dr, dth, da, dw)
        return cols

    def project(y):
        r, theta, a, w = _unpack(y, d)
        theta = theta / np.linalg.norm(theta)
        a, w = _orthonormalize(metric, np.asarray(r), theta, a, w)
        return _pack(r, theta, a, w)

    y0 = _pack(frame0.r, frame0.theta, frame0.a, frame0.w)
    states = solve_rde_step2(fields, driver, y0, project=project)
    r = states[:, 0]
    theta = states[:, 1 : 1 + d]
    a_fin = states[-1, 1 + d : 1 + 2 * d]
    w_fin = states[-1, 1 + 2 * d :].reshape(d, d)
    return DevelopedPath(
        t=driver.t, r=r[None, :], theta=theta[None, :, :],
        a=a_fin[None, :], w=w_fin[None, :, :],
    )


def flat_chart_to_ambient(r, theta):
    """Chart isometry for f = r: (r, theta) -> r * theta in flat d-space."""
    return np.asarray(r)[..., None] * np.asarray(theta)


def frame_to_ambient(frame):
    """Ambient images of the frame columns under the flat-chart isometry (f = r)."""
    return frame.theta[:, None] * frame.a[None, :] + frame.r * frame.w
