"""Warped-product kinetic Brownian motion in polar coordinates.

Two simulators share the radial pair dynamics

    dr    = rdot dt
    drdot = [f'/f(r) (1 - rdot^2) - sigma^2 (d-1)/2 rdot] dt
            + sigma sqrt(1 - rdot^2) dB

`simulate_radial` integrates that pair alone; `simulate_polar` co-evolves the
normalized angular pair (theta, v) driven by an independent d-dimensional
increment projected orthogonal to both theta and v and time-scaled by
1/sqrt(1 - rdot^2), which realizes the angular covariance exactly and keeps
<dB, dN> = 0.  Both accumulate the angular clock C, the quadratic-variation
clock D, and the pathwise log-identity integrals used for verification.
"""

import numpy as np

from .. import _kernels
from ..errors import DomainExitError, ParameterError
from ..sde_core import (
    NoiseStream,
    RDOT_CLAMP_EPS,
    StepScheme,
    clamp_rdot,
    draw_blocks,
    normalize_rows,
)
from .states import ClockRecord, PolarState, RadialState, Trajectory, config_fingerprint

__all__ = [
    "simulate_polar",
    "simulate_polar_ensemble",
    "simulate_radial",
    "simulate_radial_ensemble",
    "compute_clocks",
    "PolarEnsemble",
    "RadialEnsemble",
]

NOISE_CHUNK = 1024
KERNEL_CHUNK = 1 << 20

IDENTITY_KEYS = ("ito_I1", "ito_I2", "ito_K2")


def _check_scheme(scheme):
    scheme = scheme or StepScheme()
    if scheme.kind != "ito_euler_project":
        raise ParameterError(
            "polar-family simulators integrate the explicit Ito drifts; "
            "use scheme kind 'ito_euler_project'"
        )
    return scheme


def _require_dim(d):
    if d < 3:
        raise ParameterError(
            "polar/radial simulators need d >= 3; the d = 2 case is served by "
            "the half-plane simulator"
        )


class RadialEnsemble:
    """Stacked recordings of radial-pair paths, with clocks and identity sums."""

    def __init__(self, t, arrays, d, dt, sigma, seed, path_indices, fingerprint, metric_tag):
        self.t = t
        self.arrays = arrays  # dict of (n_paths, n_rec) arrays
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
        cols = {"r": self.arrays["r"][k], "rdot": self.arrays["rdot"][k]}
        meta = {
            "C": self.arrays["C"][k],
            "D": self.arrays["D"][k],
            "min_one_minus": float(self.arrays["min_one_minus"][k]),
            "metric_tag": self.metric_tag,
            "sigma": self.sigma,
        }
        for key in IDENTITY_KEYS:
            meta[key] = self.arrays[key][k]
        return Trajectory(
            kind="radial", t=self.t, columns=cols, d=self.d, dt=self.dt,
            seed=self.seed, path_index=int(self.path_indices[k]),
            fingerprint=self.fingerprint, meta=meta,
        )

    def clock_record(self, k):
        return ClockRecord(
            t=self.t, C=self.arrays["C"][k], D=self.arrays["D"][k],
            sigma=self.sigma, d=self.d,
        )


def _radial_path_kernel(metric, d, sigma, T, dt, stream, r0, rdot0, record_stride, fam_params, with_clocks=True):
    n_steps = int(round(T / dt))
    n_rec = n_steps // record_stride + 1
    out = np.empty((n_rec - 1, 7))
    state = np.array([r0, clamp_rdot(rdot0)], dtype=float)
    one_minus0 = 1.0 - state[1] ** 2
    alpha0 = np.sqrt(one_minus0) / float(metric.warp(r0))
    accum = np.array(
        [0.0, 0.0, 0.0, 0.0, 0.0, one_minus0, alpha0, sigma * sigma * one_minus0]
    )
    fam, beta, c, qa, qb, qc = fam_params
    written = 0
    step = 0
    while step < n_steps:
        chunk = min(KERNEL_CHUNK, n_steps - step)
        noise = stream.normals(chunk)
        exit_step, n_w = _kernels.radial_chunk(
            state, accum, noise, dt, sigma, d, fam, beta, c, qa, qb, qc,
            metric.domain_min, RDOT_CLAMP_EPS, record_stride, step,
            out[written:], with_clocks,
        )
        written += n_w
        if exit_step >= 0:
            raise DomainExitError(
                f"radial path reached domain_min at t = {exit_step * dt:.6g}",
                exit_time=exit_step * dt, path_index=stream.path_index,
            )
        step += chunk
    return out, accum


def _radial_path_generic(metric, d, sigma, T, dt, stream, r0, rdot0, record_stride):
    """Pure-python fallback for metrics outside the model families."""
    n_steps = int(round(T / dt))
    n_rec = n_steps // record_stride + 1
    out = np.empty((n_rec - 1, 7))
    r, rd = float(r0), float(clamp_rdot(rdot0))
    one_minus = 1.0 - rd * rd
    C = D = I1 = I2 = K2 = 0.0
    prev_alpha = np.sqrt(one_minus) / float(metric.warp(r))
    prev_dint = sigma * sigma * one_minus
    min_om = one_minus
    sqdt = np.sqrt(dt)
    written = 0
    step = 0
    while step < n_steps:
        chunk = min(KERNEL_CHUNK, n_steps - step)
        noise = stream.normals(chunk)
        for i in range(chunk):
            one_minus = 1.0 - rd * rd
            lam = float(metric.log_derivative(r))
            db = noise[i] * sqdt
            if one_minus > 1e-14:
                g = rd / np.sqrt(one_minus)
                I1 += rd * rd / one_minus * dt
                I2 += g * db
                K2 += (1.0 + rd * rd) / one_minus * db * db
            new_rd = clamp_rdot(
                rd + (lam * one_minus - 0.5 * sigma**2 * (d - 1) * rd) * dt
                + sigma * np.sqrt(one_minus) * db
            )
            new_r = r + rd * dt
            om = 1.0 - new_rd * new_rd
            alpha = np.sqrt(om) / float(metric.warp(max(new_r, metric.domain_min)))
            dint = sigma * sigma * om
            C += 0.5 * (prev_alpha + alpha) * dt
            D += 0.5 * (prev_dint + dint) * dt
            prev_alpha, prev_dint = alpha, dint
            min_om = min(min_om, om)
            r, rd = new_r, float(new_rd)
            if r <= metric.domain_min:
                raise DomainExitError(
                    f"radial path reached domain_min at t = {(step + i + 1) * dt:.6g}",
                    exit_time=(step + i + 1) * dt, path_index=stream.path_index,
                )
            if (step + i + 1) % record_stride == 0:
                out[written] = (r, rd, C, D, I1, I2, K2)
                written += 1
        step += chunk
    accum = np.array([C, D, I1, I2, K2, min_om, prev_alpha, prev_dint])
    return out, accum


def simulate_radial_ensemble(
    metric, d, sigma, T, scheme, seed, paths, initial, record_stride=1, path_offset=0,
    with_clocks=True,
):
    """Independent radial-pair paths; one Philox stream per path index."""
    _require_dim(d)
    scheme = _check_scheme(scheme)
    dt = scheme.dt
    initial.validate()
    n_steps = int(round(T / dt))
    n_rec = n_steps // record_stride + 1
    t = np.arange(n_rec) * (dt * record_stride)
    fam_params = _kernels.metric_family_params(metric)

    names = ["r", "rdot", "C", "D", "ito_I1", "ito_I2", "ito_K2"]
    arrays = {n: np.empty((paths, n_rec)) for n in names}
    arrays["min_one_minus"] = np.empty(paths)
    for k in range(paths):
        stream = NoiseStream(seed, path_offset + k)
        if fam_params is not None:
            out, accum = _radial_path_kernel(
                metric, d, sigma, T, dt, stream, initial.r, initial.rdot,
                record_stride, fam_params, with_clocks=with_clocks,
            )
        else:
            out, accum = _radial_path_generic(
                metric, d, sigma, T, dt, stream, initial.r, initial.rdot, record_stride
            )
        first = (initial.r, clamp_rdot(initial.rdot), 0.0, 0.0, 0.0, 0.0, 0.0)
        for j, n in enumerate(names):
            arrays[n][k, 0] = first[j]
            arrays[n][k, 1:] = out[:, j]
        arrays["min_one_minus"][k] = accum[5]

    fp = config_fingerprint(
        {"kind": "radial", "metric": metric.tag, "params": metric.params, "d": d,
         "sigma": sigma, "T": T, "dt": dt, "seed": seed, "paths": paths,
         "offset": path_offset, "stride": record_stride,
         "r0": initial.r, "rdot0": initial.rdot}
    )
    return RadialEnsemble(
        t, arrays, d, dt, sigma, seed,
        list(range(path_offset, path_offset + paths)), fp, metric.tag,
    )


def simulate_radial(metric, d, sigma, T, scheme=None, stream=None, initial=None, record_stride=1):
    """Standalone radial subdiffusion; law equals the radial marginal of the
    full polar process."""
    stream = stream or NoiseStream(0, 0)
    initial = initial or RadialState(r=10.0, rdot=0.0)
    ens = simulate_radial_ensemble(
        metric, d, sigma, T, scheme, stream.seed, 1, initial,
        record_stride=record_stride, path_offset=stream.path_index,
    )
    return ens.trajectory(0)


class PolarEnsemble:
    """Stacked recordings of full polar paths plus their clocks."""

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
        cols = {"r": self.arrays["r"][k], "rdot": self.arrays["rdot"][k]}
        for i in range(self.d):
            cols[f"theta_{i + 1}"] = self.arrays["theta"][k, :, i]
            cols[f"v_{i + 1}"] = self.arrays["v"][k, :, i]
        meta = {
            "C": self.arrays["C"][k],
            "D": self.arrays["D"][k],
            "min_one_minus": float(self.arrays["min_one_minus"][k]),
            "metric_tag": self.metric_tag,
            "sigma": self.sigma,
        }
        for key in IDENTITY_KEYS:
            meta[key] = self.arrays[key][k]
        return Trajectory(
            kind="polar", t=self.t, columns=cols, d=self.d, dt=self.dt,
            seed=self.seed, path_index=int(self.path_indices[k]),
            fingerprint=self.fingerprint, meta=meta,
        )

    def clock_record(self, k):
        return ClockRecord(
            t=self.t, C=self.arrays["C"][k], D=self.arrays["D"][k],
            sigma=self.sigma, d=self.d,
        )


def simulate_polar_ensemble(
    metric, d, sigma, T, scheme, seed, paths, initial, record_stride=1, path_offset=0
):
    """Batch of full polar paths (radial pair + normalized angular pair)."""
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
    th = np.broadcast_to(np.asarray(initial.theta, dtype=float), (n, d)).copy()
    v = np.broadcast_to(np.asarray(initial.v, dtype=float), (n, d)).copy()

    arrays = {
        "r": np.empty((n, n_rec)), "rdot": np.empty((n, n_rec)),
        "theta": np.empty((n, n_rec, d)), "v": np.empty((n, n_rec, d)),
        "C": np.zeros((n, n_rec)), "D": np.zeros((n, n_rec)),
        "ito_I1": np.zeros((n, n_rec)), "ito_I2": np.zeros((n, n_rec)),
        "ito_K2": np.zeros((n, n_rec)),
        "min_one_minus": np.empty(n),
    }
    arrays["r"][:, 0] = r
    arrays["rdot"][:, 0] = rd
    arrays["theta"][:, 0] = th
    arrays["v"][:, 0] = v

    one_minus = 1.0 - rd * rd
    C = np.zeros(n)
    D = np.zeros(n)
    I1 = np.zeros(n)
    I2 = np.zeros(n)
    K2 = np.zeros(n)
    prev_alpha = np.sqrt(one_minus) / metric.warp(r)
    prev_dint = sigma * sigma * one_minus
    min_om = one_minus.copy()

    s2 = sigma * sigma
    damp_r = 0.5 * s2 * (d - 1)
    damp_v = 0.5 * s2 * (d - 2)
    sqdt = np.sqrt(dt)
    written = 1
    step = 0
    while step < n_steps:
        chunk = min(NOISE_CHUNK, n_steps - step)
        dz = draw_blocks(streams, chunk, d + 1)
        for i in range(chunk):
            db = dz[:, i, 0] * sqdt
            dw = dz[:, i, 1:] * sqdt
            one_minus = 1.0 - rd * rd
            lam = np.asarray(metric.log_derivative(r))
            alpha = np.sqrt(one_minus) / metric.warp(r)

            ok = one_minus > 1e-14
            g = np.where(ok, rd / np.sqrt(np.where(ok, one_minus, 1.0)), 0.0)
            I1 += np.where(ok, rd * rd / np.where(ok, one_minus, 1.0) * dt, 0.0)
            I2 += g * db
            K2 += np.where(ok, (1.0 + rd * rd) / np.where(ok, one_minus, 1.0) * db * db, 0.0)

            new_rd = clamp_rdot(
                rd + (lam * one_minus - damp_r * rd) * dt
                + sigma * np.sqrt(one_minus) * db
            )
            new_r = r + rd * dt

            # angular noise: project a fresh increment orthogonal to theta and v,
            # time-scaled to the 1/(1 - rdot^2) covariance
            pw = dw - np.sum(th * dw, axis=1, keepdims=True) * th
            pw -= np.sum(v * pw, axis=1, keepdims=True) * v
            scale = sigma / np.sqrt(np.maximum(one_minus, 1e-300))
            beta = 1.0 / np.maximum(one_minus, 1e-300)
            new_th = th + v * (alpha * dt)[:, None]
            # exact integrating factor for the stiff linear damping: matches
            # Euler to O(dt^2) and stays stable when beta*dt spikes during
            # boundary-layer excursions of rdot
            decay = np.exp(-damp_v * beta * dt)
            new_v = (
                v * decay[:, None]
                - th * (alpha * dt)[:, None]
                + pw * scale[:, None]
            )
            new_th = normalize_rows(new_th)
            new_v -= np.sum(new_v * new_th, axis=1, keepdims=True) * new_th
            new_v = normalize_rows(new_v)

            if np.any(new_r <= metric.domain_min):
                k_bad = int(np.argmax(new_r <= metric.domain_min))
                raise DomainExitError(
                    f"polar path {path_offset + k_bad} reached domain_min at "
                    f"t = {(step + i + 1) * dt:.6g}",
                    exit_time=(step + i + 1) * dt, path_index=path_offset + k_bad,
                )

            om_new = 1.0 - new_rd * new_rd
            alpha_new = np.sqrt(om_new) / metric.warp(new_r)
            dint_new = s2 * om_new
            C += 0.5 * (prev_alpha + alpha_new) * dt
            D += 0.5 * (prev_dint + dint_new) * dt
            prev_alpha, prev_dint = alpha_new, dint_new
            np.minimum(min_om, om_new, out=min_om)

            r, rd, th, v = new_r, new_rd, new_th, new_v
            if (step + i + 1) % record_stride == 0:
                arrays["r"][:, written] = r
                arrays["rdot"][:, written] = rd
                arrays["theta"][:, written] = th
                arrays["v"][:, written] = v
                arrays["C"][:, written] = C
                arrays["D"][:, written] = D
                arrays["ito_I1"][:, written] = I1
                arrays["ito_I2"][:, written] = I2
                arrays["ito_K2"][:, written] = K2
                written += 1
        step += chunk
    arrays["min_one_minus"][:] = min_om

    fp = config_fingerprint(
        {"kind": "polar", "metric": metric.tag, "params": metric.params, "d": d,
         "sigma": sigma, "T": T, "dt": dt, "seed": seed, "paths": paths,
         "offset": path_offset, "stride": record_stride,
         "r0": initial.r, "rdot0": initial.rdot}
    )
    return PolarEnsemble(
        t_rec, arrays, d, dt, sigma, seed,
        list(range(path_offset, path_offset + paths)), fp, metric.tag,
    )


def simulate_polar(metric, d, sigma, T, scheme=None, stream=None, initial=None, record_stride=1):
    """One full polar path; returns (Trajectory, ClockRecord)."""
    stream = stream or NoiseStream(0, 0)
    if initial is None:
        theta = np.zeros(d)
        theta[0] = 1.0
        v = np.zeros(d)
        v[1] = 1.0
        initial = PolarState(r=10.0, rdot=0.0, theta=theta, v=v)
    ens = simulate_polar_ensemble(
        metric, d, sigma, T, scheme, stream.seed, 1, initial,
        record_stride=record_stride, path_offset=stream.path_index,
    )
    return ens.trajectory(0), ens.clock_record(0)


def pathwise_identity_error(traj, metric, sigma=None, d=None):
    """Relative error of the exponential identity for f^2(r)(1 - rdot^2).

    Both sides are built from the recorded path and the identity integrals
    accumulated during simulation.  The deterministic integrand is split as

        (d-3) x^2/(1-x^2) - 1  ==  (d-1) x^2/(1-x^2) - (1+x^2)/(1-x^2)

    and the second piece is integrated against the realized dB^2 (K2), which
    cancels the Euler scheme's leading local error; the left-point variant is
    reported as well.  Returns the running relative-error series of both.
    """
    if traj.kind not in ("radial", "polar"):
        raise ParameterError("identity check needs a radial or polar trajectory")
    sigma = traj.meta.get("sigma", sigma)
    d = d or traj.d
    for key in IDENTITY_KEYS:
        if key not in traj.meta:
            raise ParameterError("trajectory lacks identity accumulators")
    r = traj.array("r")
    rd = traj.array("rdot")
    f = np.asarray(metric.warp(r))
    lhs = f * f * (1.0 - rd * rd)
    I1 = traj.meta["ito_I1"]
    I2 = traj.meta["ito_I2"]
    K2 = traj.meta["ito_K2"]
    s2 = sigma * sigma
    log_rhs_matched = np.log(lhs[0]) + s2 * (d - 1) * I1 - s2 * K2 - 2.0 * sigma * I2
    log_rhs_left = np.log(lhs[0]) - s2 * traj.t + (d - 3) * s2 * I1 - 2.0 * sigma * I2
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        err_matched = np.abs(lhs / np.exp(log_rhs_matched) - 1.0)
        err_left = np.abs(lhs / np.exp(log_rhs_left) - 1.0)
    return {
        "relative_error": err_matched,
        "relative_error_left": err_left,
        "max_relative_error": float(np.nanmax(err_matched)),
    }


def compute_clocks(traj, metric=None, sigma=None):
    """Clock record for a recorded radial or polar trajectory.

    Uses the full-resolution accumulators stored by the simulators when
    available; otherwise falls back to trapezoid sums over the recorded grid.
    """
    if traj.kind not in ("radial", "polar"):
        raise ParameterError("clocks are defined for radial/polar trajectories")
    sigma = traj.meta.get("sigma", sigma)
    if sigma is None:
        raise ParameterError("sigma is needed to scale the D clock")
    if "C" in traj.meta and "D" in traj.meta:
        return ClockRecord(t=traj.t, C=traj.meta["C"], D=traj.meta["D"],
                           sigma=sigma, d=traj.d)
    if metric is None:
        raise ParameterError("metric is needed to rebuild clocks from samples")
    r = traj.array("r")
    rd = traj.array("rdot")
    one_minus = np.clip(1.0 - rd * rd, 0.0, 1.0)
    alpha = np.sqrt(one_minus) / metric.warp(np.maximum(r, metric.domain_min))
    dint = sigma * sigma * one_minus
    dt_grid = np.diff(traj.t)
    C = np.concatenate([[0.0], np.cumsum(0.5 * (alpha[1:] + alpha[:-1]) * dt_grid)])
    D = np.concatenate([[0.0], np.cumsum(0.5 * (dint[1:] + dint[:-1]) * dt_grid)])
    return ClockRecord(t=traj.t, C=C, D=D, sigma=sigma, d=traj.d)
