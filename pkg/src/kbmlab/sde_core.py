"""Reproducible noise streams and constraint-preserving stochastic steppers.

Noise is produced by counter-based (Philox) generators keyed by
(seed, path_index): the same key always replays the same Gaussian sequence,
and distinct path indices give statistically independent streams, so ensembles
can be scheduled in any order (or in parallel) without changing results.
"""

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .errors import NumericalError, ParameterError, StateError

__all__ = [
    "NoiseStream",
    "StepScheme",
    "gaussian_increments",
    "ito_euler_project_step",
    "stratonovich_heun_step",
    "normalize_rows",
    "project_orthogonal_rows",
    "clamp_rdot",
    "polar_reorthonormalize",
    "RDOT_CLAMP_EPS",
]

RDOT_CLAMP_EPS = 1e-12

SCHEME_KINDS = ("ito_euler_project", "stratonovich_heun_project")


class NoiseStream:
    """Deterministic per-path Gaussian stream.

    Parameters
    ----------
    seed : int
        64-bit ensemble seed.
    path_index : int
        Index of the path within the ensemble; distinct indices key
        independent Philox streams.
    """

    def __init__(self, seed, path_index=0):
        self.seed = int(seed)
        self.path_index = int(path_index)
        self.count = 0
        self._gen = self._make_generator()

    def _make_generator(self):
        key = np.array([self.seed, self.path_index], dtype=np.uint64)
        return Generator(Philox(key=key))

    def normals(self, count):
        """Next `count` standard normal draws; advances the step counter."""
        if count < 1:
            raise ParameterError("count must be >= 1")
        self.count += int(count)
        return self._gen.standard_normal(int(count))

    def reset(self):
        """Rewind to the start of the stream."""
        self.count = 0
        self._gen = self._make_generator()

    def spawn(self, path_index):
        """Stream for another path of the same ensemble."""
        return NoiseStream(self.seed, path_index)

    def __repr__(self):
        return f"NoiseStream(seed={self.seed}, path_index={self.path_index}, count={self.count})"


@dataclass(frozen=True)
class StepScheme:
    """Integration scheme selector; carries the time step."""

    kind: str = "ito_euler_project"
    dt: float = 1e-3

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ParameterError(f"unknown scheme '{self.kind}'")
        if not self.dt > 0:
            raise ParameterError("dt must be positive")


def gaussian_increments(stream, count, dt):
    """`count` independent N(0, dt) increments from the stream."""
    return stream.normals(count) * np.sqrt(dt)


def draw_blocks(streams, steps, per_step):
    """Stack per-path noise blocks into an (n_paths, steps, per_step) array.

    Each path consumes exactly ``steps * per_step`` standard normals from its
    own stream, in step-major order, so block-drawn ensembles replay the same
    values a one-path-at-a-time loop would.
    """
    out = np.empty((len(streams), steps, per_step))
    for i, s in enumerate(streams):
        out[i] = s.normals(steps * per_step).reshape(steps, per_step)
    return out


def normalize_rows(x):
    """Rescale each row to unit Euclidean norm."""
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def project_orthogonal_rows(v, u):
    """Remove from each row of v its component along the matching row of u."""
    return v - np.sum(v * u, axis=-1, keepdims=True) * u


def clamp_rdot(rdot, eps=RDOT_CLAMP_EPS):
    """Keep the radial velocity strictly inside (-1, 1).

    The square-root diffusion coefficient degenerates at |rdot| = 1; the
    boundary is not reached in continuous time for d >= 3 but a discrete step
    can overshoot it.
    """
    return np.clip(rdot, -1.0 + eps, 1.0 - eps)


def polar_reorthonormalize(mats):
    """Snap (..., k, k) matrices to the orthogonal factor of their polar form.

    One Newton-Schulz iteration, which is exact to round-off for the
    near-orthogonal matrices produced by a single integration step; falls
    back to an SVD-based polar decomposition when the drift is large.
    """
    mats = np.asarray(mats, dtype=float)
    eye = np.eye(mats.shape[-1])
    gram = np.swapaxes(mats, -1, -2) @ mats
    defect = np.abs(gram - eye).max()
    if defect <= 1e-14:
        # already orthogonal to round-off: a true fixed point
        return mats
    if defect < 0.1:
        out = mats
        for _ in range(4):
            out = out @ (1.5 * eye - 0.5 * gram)
            gram = np.swapaxes(out, -1, -2) @ out
            if np.abs(gram - eye).max() <= 1e-14:
                break
        return out
    u, _, vt = np.linalg.svd(mats)
    return u @ vt


def _check_finite(state, step_index):
    if not np.all(np.isfinite(state)):
        raise NumericalError(
            "non-finite state component", step_index=step_index
        )


def ito_euler_project_step(drift, noise_coeffs, state, constraints, dZ, step_index=0):
    """One Euler-Maruyama update followed by a constraint projection.

    Parameters
    ----------
    drift : ndarray
        Drift already multiplied by dt (same shape as state).
    noise_coeffs : ndarray
        Either a matrix mapping the Gaussian increment vector to state space,
        or an array shaped like the state for elementwise noise.
    state : ndarray
        Flat state vector (or batch of them).
    constraints : callable
        Projection map applied to the updated state; pass ``None`` to skip.
    dZ : ndarray
        Gaussian increments N(0, dt).
    """
    noise_coeffs = np.asarray(noise_coeffs)
    if noise_coeffs.ndim == 2 and noise_coeffs.shape[1] == np.shape(dZ)[-1]:
        kick = noise_coeffs @ dZ
    else:
        kick = noise_coeffs * dZ
    new = state + drift + kick
    _check_finite(new, step_index)
    if constraints is not None:
        new = constraints(new)
    return new


def stratonovich_heun_step(vector_field_eval, state, dZ, dt, constraints=None, step_index=0):
    """Predictor-corrector Heun update consistent with Stratonovich calculus.

    ``vector_field_eval(state)`` must return ``(drift, noise_matrix)`` where
    drift is per unit time and noise_matrix maps the Gaussian increments to
    state space.
    """
    b0, s0 = vector_field_eval(state)
    s0 = np.asarray(s0)
    kick0 = s0 @ dZ if s0.ndim == 2 else s0 * dZ
    pred = state + b0 * dt + kick0
    b1, s1 = vector_field_eval(pred)
    s1 = np.asarray(s1)
    kick1 = s1 @ dZ if s1.ndim == 2 else s1 * dZ
    new = state + 0.5 * (b0 + b1) * dt + 0.5 * (kick0 + kick1)
    _check_finite(new, step_index)
    if constraints is not None:
        new = constraints(new)
    return new


def ensure_unit(x, tol=1e-9, what="vector"):
    """Validate that rows of x are unit vectors within tolerance."""
    n = np.linalg.norm(x, axis=-1)
    if np.any(np.abs(n - 1.0) > tol):
        raise StateError(f"{what} norm deviates from 1 by {np.abs(n - 1.0).max():.3e}")
