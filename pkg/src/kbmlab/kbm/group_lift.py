"""Rotation-group lift of the polar dynamics.

The angular pair (theta, v) is represented through two rotations: b, a
time-changed hypoelliptic Brownian motion on the subgroup fixing the first
basis vector, and g, which rotates at rate alpha(r, rdot) = sqrt(1-rdot^2)/f(r)
around the conjugated plane generator b H0 b^T.  Then e = g b carries
theta = g e1 and v = g b e2, and (r, rdot, g e1, g b e2) has the law of the
polar process.

The b step uses the closed-form rotation exp of its rank-2 increment (exactly
orthogonal, exactly fixing e1); the g step is an Euler update followed by a
polar-decomposition reprojection, with the pre-projection orthogonality
defect tracked and required to stay below 1e-6.
"""

import numpy as np

from ..errors import DomainExitError, NumericalError, ParameterError
from ..sde_core import (
    NoiseStream,
    RDOT_CLAMP_EPS,
    clamp_rdot,
    draw_blocks,
    polar_reorthonormalize,
)
from .states import GroupLiftState, Trajectory, config_fingerprint
from .polar import _check_scheme, _require_dim

__all__ = [
    "simulate_group_lift",
    "simulate_group_lift_ensemble",
    "group_lift_initial",
    "plane_generator",
    "GroupLiftEnsemble",
]

NOISE_CHUNK = 512
ORTHO_DRIFT_LIMIT = 1e-6


def plane_generator(d, i, j):
    """Antisymmetric generator rotating basis axis i toward axis j (1-based)."""
    m = np.zeros((d, d))
    m[j - 1, i - 1] = 1.0
    m[i - 1, j - 1] = -1.0
    return m


def group_lift_initial(r, rdot, theta, v):
    """Lift state matching a polar initial condition: g e1 = theta, g e2 = v, b = I."""
    theta = np.asarray(theta, dtype=float)
    v = np.asarray(v, dtype=float)
    d = theta.shape[0]
    cols = [theta, v]
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        w = e - sum(np.dot(e, col) * col for col in cols)
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            cols.append(w / norm)
        if len(cols) == d:
            break
    g = np.column_stack(cols)
    if np.linalg.det(g) < 0:
        g[:, -1] = -g[:, -1]
    return GroupLiftState(r=float(r), rdot=float(rdot), b=np.eye(d), g=g)


def _rank2_rotation(e2, u):
    """exp(e2 u^T - u e2^T) for batched u orthogonal to e1, e2 (Rodrigues).

    The generator has A^3 = -|u|^2 A, so the exponential closes at A^2 and
    the result is exactly orthogonal and exactly fixes e1.
    """
    n, d = u.shape
    phi = np.linalg.norm(u, axis=1)
    small = phi < 1e-8
    phi_safe = np.where(small, 1.0, phi)
    s = np.where(small, 1.0 - phi**2 / 6.0, np.sin(phi_safe) / phi_safe)
    cfac = np.where(small, 0.5 - phi**2 / 24.0, (1.0 - np.cos(phi_safe)) / phi_safe**2)
    A = e2[None, :, None] * u[:, None, :] - u[:, :, None] * e2[None, None, :]
    ee = np.outer(e2, e2)
    A2 = -(phi**2)[:, None, None] * ee[None, :, :] - u[:, :, None] * u[:, None, :]
    return np.eye(d)[None, :, :] + s[:, None, None] * A + cfac[:, None, None] * A2


class GroupLiftEnsemble:
    """Stacked recordings of lifted paths."""

    def __init__(self, t, arrays, d, dt, sigma, seed, path_indices, fingerprint, metric_tag):
        self.t = t
        self.arrays = arrays
        self.d = d
        self.dt = dt
        self.sigma = sigma
        self.seed = seed
        self.path_indices = path_indices
        self.fingerprint = fingerprint
        self.metric_tag = metric_tag

    @property
    def n_paths(self):
        return self.arrays["r"].shape[0]

    def trajectory(self, k):
        d = self.d
        cols = {"r": self.arrays["r"][k], "rdot": self.arrays["rdot"][k]}
        for i in range(d):
            for j in range(d):
                cols[f"b_{i + 1}{j + 1}"] = self.arrays["b"][k, :, i, j]
                cols[f"g_{i + 1}{j + 1}"] = self.arrays["g"][k, :, i, j]
        meta = {
            "sigma": self.sigma,
            "metric_tag": self.metric_tag,
            "max_ortho_drift": float(self.arrays["max_ortho_drift"][k]),
        }
        return Trajectory(
            kind="group_lift", t=self.t, columns=cols, d=d, dt=self.dt,
            seed=self.seed, path_index=int(self.path_indices[k]),
            fingerprint=self.fingerprint, meta=meta,
        )

    def g_e1(self):
        """g_t e1 for all paths and record times, shape (n, n_rec, d)."""
        return self.arrays["g"][:, :, :, 0]


def simulate_group_lift_ensemble(
    metric, d, sigma, T, scheme, seed, paths, initial, record_stride=1, path_offset=0
):
    """Batch of lifted paths (r, rdot, b, g)."""
    _require_dim(d)
    scheme = _check_scheme(scheme)
    dt = scheme.dt
    initial.validate()
    n_steps = int(round(T / dt))
    n_rec = n_steps // record_stride + 1
    t_rec = np.arange(n_rec) * (dt * record_stride)
    n = paths
    streams = [NoiseStream(seed, path_offset + k) for k in range(n)]

    r = np.full(n, float(initial.r))
    rd = np.full(n, float(clamp_rdot(initial.rdot)))
    b = np.broadcast_to(initial.b, (n, d, d)).copy()
    g = np.broadcast_to(initial.g, (n, d, d)).copy()

    arrays = {
        "r": np.empty((n, n_rec)), "rdot": np.empty((n, n_rec)),
        "b": np.empty((n, n_rec, d, d)), "g": np.empty((n, n_rec, d, d)),
        "max_ortho_drift": np.zeros(n),
    }
    arrays["r"][:, 0] = r
    arrays["rdot"][:, 0] = rd
    arrays["b"][:, 0] = b
    arrays["g"][:, 0] = g

    e2 = np.zeros(d)
    e2[1] = 1.0
    h0 = plane_generator(d, 1, 2)  # e2 e1^T - e1 e2^T: rotates e1 toward e2
    s2 = sigma * sigma
    damp_r = 0.5 * s2 * (d - 1)
    sqdt = np.sqrt(dt)
    eye = np.eye(d)
    max_drift = np.zeros(n)
    written = 1
    step = 0
    while step < n_steps:
        chunk = min(NOISE_CHUNK, n_steps - step)
        dz = draw_blocks(streams, chunk, d - 1)
        for i in range(chunk):
            db = dz[:, i, 0] * sqdt
            dbj = dz[:, i, 1:] * sqdt  # drives axes 3..d
            one_minus = 1.0 - rd * rd
            lam = np.asarray(metric.log_derivative(r))
            alpha = np.sqrt(one_minus) / metric.warp(r)
            root_beta = 1.0 / np.sqrt(np.maximum(one_minus, 1e-300))

            new_rd = clamp_rdot(
                rd + (lam * one_minus - damp_r * rd) * dt
                + sigma * np.sqrt(one_minus) * db
            )
            new_r = r + rd * dt
            if np.any(new_r <= metric.domain_min):
                k_bad = int(np.argmax(new_r <= metric.domain_min))
                raise DomainExitError(
                    f"lifted path {path_offset + k_bad} reached domain_min at "
                    f"t = {(step + i + 1) * dt:.6g}",
                    exit_time=(step + i + 1) * dt, path_index=path_offset + k_bad,
                )

            # b step: closed-form rotation by the rank-2 Stratonovich increment
            u = np.zeros((n, d))
            u[:, 2:] = sigma * root_beta[:, None] * dbj
            b = b @ _rank2_rotation(e2, u)

            # g step: Euler on dg = alpha g (b H0 b^T) dt, then polar reprojection
            w = b[:, :, 1]  # b e2
            m = w[:, :, None] * b[:, :, 0][:, None, :] - b[:, :, 0][:, :, None] * w[:, None, :]
            g_new = g + (alpha * dt)[:, None, None] * (g @ m)
            gram = np.swapaxes(g_new, 1, 2) @ g_new
            defect = np.abs(gram - eye).max(axis=(1, 2))
            np.maximum(max_drift, defect, out=max_drift)
            if np.any(defect > ORTHO_DRIFT_LIMIT):
                raise NumericalError(
                    "orthogonality drift beyond 1e-6 before reprojection",
                    step_index=step + i + 1,
                    diagnostics={"max_defect": float(defect.max())},
                )
            g = polar_reorthonormalize(g_new)

            r, rd = new_r, new_rd
            if (step + i + 1) % record_stride == 0:
                arrays["r"][:, written] = r
                arrays["rdot"][:, written] = rd
                arrays["b"][:, written] = b
                arrays["g"][:, written] = g
                written += 1
        step += chunk
    arrays["max_ortho_drift"][:] = max_drift

    fp = config_fingerprint(
        {"kind": "group_lift", "metric": metric.tag, "params": metric.params,
         "d": d, "sigma": sigma, "T": T, "dt": dt, "seed": seed, "paths": paths,
         "offset": path_offset, "stride": record_stride, "r0": initial.r,
         "rdot0": initial.rdot}
    )
    return GroupLiftEnsemble(
        t_rec, arrays, d, dt, sigma, seed,
        list(range(path_offset, path_offset + paths)), fp, metric.tag,
    )


def simulate_group_lift(metric, d, sigma, T, scheme=None, stream=None, initial=None, record_stride=1):
    """One lifted path; returns a Trajectory with b and g matrix columns."""
    stream = stream or NoiseStream(0, 0)
    if initial is None:
        theta = np.zeros(d)
        theta[0] = 1.0
        v = np.zeros(d)
        v[1] = 1.0
        initial = group_lift_initial(10.0, 0.0, theta, v)
    ens = simulate_group_lift_ensemble(
        metric, d, sigma, T, scheme, stream.seed, 1, initial,
        record_stride=record_stride, path_offset=stream.path_index,
    )
    return ens.trajectory(0)
