"""State containers, recorded trajectories and clock records.

Each simulator family has a fixed CSV column order so trajectory files are
reproducible byte for byte and can be reloaded without metadata.
"""

import hashlib
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, StateError

__all__ = [
    "EuclideanState",
    "PolarState",
    "RadialState",
    "HyperbolicPlaneState",
    "GroupLiftState",
    "Trajectory",
    "ClockRecord",
    "column_order",
    "config_fingerprint",
]

UNIT_TOL = 1e-9
ORTHO_TOL = 1e-8


def _unit_check(vec, tol, what):
    n = float(np.linalg.norm(vec))
    if abs(n - 1.0) > tol:
        raise StateError(f"{what} has norm {n}, expected 1 within {tol}")


@dataclass
class EuclideanState:
    """Position and unit velocity of the flat-space process."""

    x: np.ndarray
    xdot: np.ndarray

    def validate(self):
        _unit_check(self.xdot, UNIT_TOL, "xdot")
        return self


@dataclass
class PolarState:
    """Radial pair plus normalized angular pair (theta, v), v = direction of thetadot."""

    r: float
    rdot: float
    theta: np.ndarray
    v: np.ndarray

    def validate(self):
        if not self.r > 0:
            raise StateError("r must be positive")
        if abs(self.rdot) > 1.0 + UNIT_TOL:
            raise StateError("|rdot| must be <= 1")
        _unit_check(self.theta, UNIT_TOL, "theta")
        _unit_check(self.v, UNIT_TOL, "v")
        dot = float(np.dot(self.theta, self.v))
        if abs(dot) > UNIT_TOL:
            raise StateError(f"<theta, v> = {dot}, expected 0")
        return self

    def thetadot_norm(self, metric):
        """|thetadot| reconstructed from the arc-length relation."""
        return float(np.sqrt(max(1.0 - self.rdot**2, 0.0)) / metric.warp(self.r))


@dataclass
class RadialState:
    """The autonomous radial pair."""

    r: float
    rdot: float

    def validate(self):
        if not self.r > 0:
            raise StateError("r must be positive")
        if abs(self.rdot) > 1.0 + UNIT_TOL:
            raise StateError("|rdot| must be <= 1")
        return self


@dataclass
class HyperbolicPlaneState:
    """Half-plane state; arc-length parametrization ties (xdot, ydot) to y."""

    x: float
    y: float
    xdot: float
    ydot: float

    def validate(self):
        if not self.y > 0:
            raise StateError("y must be positive")
        speed = (self.xdot**2 + self.ydot**2) / self.y**2
        if abs(speed - 1.0) > UNIT_TOL:
            raise StateError(f"(xdot^2+ydot^2)/y^2 = {speed}, expected 1")
        return self

    @property
    def u(self):
        return self.ydot / self.y

    @property
    def w(self):
        return self.xdot / self.y


@dataclass
class GroupLiftState:
    """Radial pair plus rotation pair (b, g); b fixes the first basis vector."""

    r: float
    rdot: float
    b: np.ndarray
    g: np.ndarray

    def validate(self):
        if not self.r > 0:
            raise StateError("r must be positive")
        if abs(self.rdot) > 1.0 + UNIT_TOL:
            raise StateError("|rdot| must be <= 1")
        d = self.b.shape[0]
        eye = np.eye(d)
        for name, m in (("b", self.b), ("g", self.g)):
            if np.abs(m.T @ m - eye).max() > ORTHO_TOL:
                raise StateError(f"{name} is not orthogonal within {ORTHO_TOL}")
            if abs(np.linalg.det(m) - 1.0) > ORTHO_TOL:
                raise StateError(f"det {name} != 1")
        e1 = eye[:, 0]
        if not np.array_equal(self.b @ e1, e1):
            raise StateError("b must fix the first basis vector exactly")
        return self

    @property
    def e(self):
        """Combined rotation carrying (theta, v) as its first two columns."""
        return self.g @ self.b


def column_order(kind, d):
    """Fixed CSV column order (after the leading t column) per state type."""
    if kind == "euclidean":
        return [f"x_{i}" for i in range(1, d + 1)] + [f"xdot_{i}" for i in range(1, d + 1)]
    if kind == "polar":
        return (
            ["r", "rdot"]
            + [f"theta_{i}" for i in range(1, d + 1)]
            + [f"v_{i}" for i in range(1, d + 1)]
        )
    if kind == "radial":
        return ["r", "rdot"]
    if kind == "h2":
        return ["x", "y", "xdot", "ydot", "u", "logy"]
    if kind == "group_lift":
        cols = ["r", "rdot"]
        cols += [f"b_{i}{j}" for i in range(1, d + 1) for j in range(1, d + 1)]
        cols += [f"g_{i}{j}" for i in range(1, d + 1) for j in range(1, d + 1)]
        return cols
    raise InputError(f"unknown trajectory kind '{kind}'")


def config_fingerprint(config):
    """Short content hash of a configuration mapping."""
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Trajectory:
    """Recorded samples of one simulated path on a uniform (strided) grid."""

    kind: str
    t: np.ndarray
    columns: dict
    d: int
    dt: float
    seed: int = 0
    path_index: int = 0
    fingerprint: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise InputError("trajectory timestamps must be strictly increasing")

    def __len__(self):
        return len(self.t)

    @property
    def T(self):
        return float(self.t[-1])

    def column_names(self):
        return column_order(self.kind, self.d)

    def array(self, name):
        return self.columns[name]

    def stack(self, names):
        return np.stack([self.columns[n] for n in names], axis=1)

    def state_at(self, i):
        """Typed state snapshot at record index i."""
        c = self.columns
        if self.kind == "euclidean":
            x = np.array([c[f"x_{k}"][i] for k in range(1, self.d + 1)])
            v = np.array([c[f"xdot_{k}"][i] for k in range(1, self.d + 1)])
            return EuclideanState(x, v)
        if self.kind == "polar":
            th = np.array([c[f"theta_{k}"][i] for k in range(1, self.d + 1)])
            v = np.array([c[f"v_{k}"][i] for k in range(1, self.d + 1)])
            return PolarState(float(c["r"][i]), float(c["rdot"][i]), th, v)
        if self.kind == "radial":
            return RadialState(float(c["r"][i]), float(c["rdot"][i]))
        if self.kind == "h2":
            return HyperbolicPlaneState(
                float(c["x"][i]), float(c["y"][i]), float(c["xdot"][i]), float(c["ydot"][i])
            )
        if self.kind == "group_lift":
            d = self.d
            b = np.array([[c[f"b_{i_}{j}"][i] for j in range(1, d + 1)] for i_ in range(1, d + 1)])
            g = np.array([[c[f"g_{i_}{j}"][i] for j in range(1, d + 1)] for i_ in range(1, d + 1)])
            return GroupLiftState(float(c["r"][i]), float(c["rdot"][i]), b, g)
        raise InputError(f"unknown trajectory kind '{self.kind}'")

    def states(self):
        for i in range(len(self)):
            yield self.state_at(i)

    def to_csv(self, path_or_buf):
        names = self.column_names()
        data = np.column_stack([self.t] + [self.columns[n] for n in names])
        header = ",".join(["t"] + names)
        if hasattr(path_or_buf, "write"):
            np.savetxt(path_or_buf, data, delimiter=",", header=header, comments="", fmt="%.17g")
        else:
            with open(path_or_buf, "w") as fh:
                np.savetxt(fh, data, delimiter=",", header=header, comments="", fmt="%.17g")

    def to_csv_bytes(self):
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue().encode()

    @classmethod
    def from_csv(cls, path, kind, d, dt=None, seed=0, path_index=0):
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        with open(path) as fh:
            names = fh.readline().strip().split(",")
        if names[0] != "t":
            raise InputError("first CSV column must be t")
        t = raw[:, 0]
        columns = {n: raw[:, k + 1] for k, n in enumerate(names[1:])}
        if dt is None:
            dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(kind=kind, t=t, columns=columns, d=d, dt=dt, seed=seed, path_index=path_index)


@dataclass
class ClockRecord:
    """Additive clocks along a radial or polar path.

    C is the angular clock int sqrt(1-rdot^2)/f(r) ds; D is the quadratic
    variation clock sigma^2 int (1-rdot^2) ds.  Both are accumulated by the
    trapezoid rule at full step resolution.
    """

    t: np.ndarray
    C: np.ndarray
    D: np.ndarray
    sigma: float
    d: int

    def __post_init__(self):
        if np.any(np.diff(self.C) < -1e-15) or np.any(np.diff(self.D) < -1e-15):
            raise InputError("clock values must be non-decreasing")

    def increment(self, t_from, t_to=None):
        """C(t_to) - C(t_from) by grid lookup (t_to defaults to the horizon)."""
        i0 = int(np.searchsorted(self.t, t_from))
        i1 = len(self.t) - 1 if t_to is None else int(np.searchsorted(self.t, t_to))
        i0 = min(i0, len(self.t) - 1)
        i1 = min(i1, len(self.t) - 1)
        return float(self.C[i1] - self.C[i0])

    def time_changed_series(self, r, rdot, n=None):
        """(tau, rho, u) with rho = r at D-inverse(tau), u = sigma_tilde*rho + rhodot.

        sigma_tilde = (d-1) sigma^2 / 2; the series is tabulated on a uniform
        tau grid spanning [0, D(T)] by interpolation of the recorded path.
        """
        sig_t = 0.5 * (self.d - 1) * self.sigma**2
        if self.D[-1] <= 0:
            raise InputError("degenerate D clock (sigma = 0?)")
        n = len(self.t) if n is None else int(n)
        tau = np.linspace(0.0, self.D[-1], n)
        # D is nondecreasing; invert by interpolation on strictly increasing knots
        keep = np.concatenate([[True], np.diff(self.D) > 0])
        t_of_tau = np.interp(tau, self.D[keep], self.t[keep])
        rho = np.interp(t_of_tau, self.t, r)
        rhodot = np.interp(t_of_tau, self.t, rdot)
        return tau, rho, sig_t * rho + rhodot
