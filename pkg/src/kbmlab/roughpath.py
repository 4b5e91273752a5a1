"""Level-2 rough-path lifts, their algebra, and a step-2 Euler solver.

A sampled path is lifted to (X, XX) where X_t is the increment from the start
and XX_t the iterated integral of the piecewise-linear interpolant; for that
interpolant the lift is exact, the consistency relation over concatenated
intervals holds by construction, and the symmetric part of XX equals
X (x) X / 2 (weak geometricity).  Increments between interior times come from
the stored start-anchored values:

    X_ts  = X_t - X_s
    XX_ts = XX_t - XX_s - X_s (x) X_ts
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalError, ParameterError, StatisticsError

__all__ = [
    "Level2Path",
    "HolderDiagnostics",
    "lift_level2",
    "chen_combine",
    "holder_diagnostics",
    "solve_rde_step2",
    "brownian_rough_ensemble",
]


@dataclass
class Level2Path:
    """First and second signature levels anchored at the initial time."""

    t: np.ndarray
    X: np.ndarray   # (n, d) increments from t[0]
    XX: np.ndarray  # (n, d, d) iterated integrals from t[0]
    gamma: float = 0.45

    def __post_init__(self):
        if not (1.0 / 3.0 < self.gamma <= 0.5):
            raise ParameterError("gamma must lie in (1/3, 1/2]")
        if len(self.t) != len(self.X) or len(self.t) != len(self.XX):
            raise InputError("t, X, XX must have matching lengths")

    @property
    def d(self):
        return self.X.shape[1]

    def __len__(self):
        return len(self.t)

    def increment(self, i, j):
        """(X_ts, XX_ts) for grid indices s = i <= t = j."""
        xs = self.X[i]
        xts = self.X[j] - xs
        xxts = self.XX[j] - self.XX[i] - np.outer(xs, xts)
        return xts, xxts

    def antisymmetric(self, i=None, j=None):
        """Antisymmetric part of XX over [i, j] (whole path by default)."""
        if i is None:
            xx = self.XX[-1]
        else:
            _, xx = self.increment(i, j)
        return 0.5 * (xx - xx.T)

    def chen_defect(self, i, k, j):
        """Max abs defect of the concatenation identity over s=i <= u=k <= t=j."""
        x_ts, xx_ts = self.increment(i, j)
        x_us, xx_us = self.increment(i, k)
        x_tu, xx_tu = self.increment(k, j)
        return float(np.abs(xx_ts - (xx_us + xx_tu + np.outer(x_us, x_tu))).max())

    def sym_defect(self, i, j):
        """Max abs defect of Sym(XX_ts) = X_ts (x) X_ts / 2."""
        x_ts, xx_ts = self.increment(i, j)
        return float(np.abs(0.5 * (xx_ts + xx_ts.T) - 0.5 * np.outer(x_ts, x_ts)).max())


def lift_level2(samples, t=None, gamma=0.45):
    """Exact level-2 lift of the piecewise-linear interpolant of the samples.

    Per interval the second level gains X_prev (x) dX + dX (x) dX / 2.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or len(samples) < 2:
        raise InputError("need at least two d-dimensional samples")
    n, d = samples.shape
    if t is None:
        t = np.linspace(0.0, 1.0, n)
    t = np.asarray(t, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise InputError("time grid must be strictly increasing")
    X = samples - samples[0]
    dX = np.diff(X, axis=0)
    terms = np.einsum("ni,nj->nij", X[:-1], dX) + 0.5 * np.einsum("ni,nj->nij", dX, dX)
    XX = np.concatenate([np.zeros((1, d, d)), np.cumsum(terms, axis=0)])
    return Level2Path(t=t, X=X, XX=XX, gamma=gamma)


def chen_combine(a, b):
    """Concatenate two lifts; b must start where a ends (in time)."""
    if abs(a.t[-1] - b.t[0]) > 1e-12:
        raise InputError(
            f"interval mismatch: first path ends at {a.t[-1]}, second starts at {b.t[0]}"
        )
    xa = a.X[-1]
    X = np.concatenate([a.X, xa + b.X[1:]])
    shifted = a.XX[-1] + b.XX[1:] + np.einsum("i,nj->nij", xa, b.X[1:])
    XX = np.concatenate([a.XX, shifted])
    t = np.concatenate([a.t, b.t[1:]])
    return Level2Path(t=t, X=X, XX=XX, gamma=min(a.gamma, b.gamma))


def restrict(path, i, j):
    """Sub-lift over grid indices [i, j], re-anchored at i."""
    xs = path.X[i]
    X = path.X[i : j + 1] - xs
    XX = (
        path.XX[i : j + 1]
        - path.XX[i]
        - np.einsum("i,nj->nij", xs, X)
    )
    return Level2Path(t=path.t[i : j + 1], X=X, XX=XX, gamma=path.gamma)


@dataclass
class HolderDiagnostics:
    """Empirical moment scaling of an ensemble of lifts over dyadic spans."""

    q: int
    spans: np.ndarray
    level1_moments: np.ndarray
    level2_moments: np.ndarray
    level1_slope: float
    level2_slope: float
    gamma_grid: np.ndarray = field(default_factory=lambda: np.linspace(0.34, 0.5, 9))
    level1_seminorm: np.ndarray = None
    level2_seminorm: np.ndarray = None


def holder_diagnostics(ensemble, q=4, pair_budget=64):
    """Moment-scaling estimates E|X_ts|^q ~ |t-s|^(q/2), E|XX_ts|^q ~ |t-s|^q.

    Pairs (s, t) are dyadic spans of the common grid, at most `pair_budget`
    offsets per span.  Slopes are least-squares fits in log-log coordinates.
    """
    if q not in (2, 4, 6):
        raise ParameterError("q must be one of 2, 4, 6")
    if len(ensemble) < 100:
        raise StatisticsError("need an ensemble of at least 100 lifts")
    n = len(ensemble[0])
    levels = int(np.floor(np.log2(n - 1)))
    spans, m1, m2 = [], [], []
    sup1 = None
    sup2 = None
    gamma_grid = np.linspace(0.34, 0.5, 9)
    for m in range(1, levels):
        span = (n - 1) // (2**m)
        if span < 1:
            break
        offsets = np.unique(
            np.linspace(0, n - 1 - span, min(pair_budget, n - span), dtype=int)
        )
        acc1, acc2, cnt = 0.0, 0.0, 0
        h = None
        for p in ensemble:
            xs = p.X[offsets]
            xt = p.X[offsets + span]
            x_ts = xt - xs
            xx_ts = (
                p.XX[offsets + span]
                - p.XX[offsets]
                - np.einsum("ni,nj->nij", xs, x_ts)
            )
            n1 = np.linalg.norm(x_ts, axis=1)
            n2 = np.linalg.norm(xx_ts.reshape(len(offsets), -1), axis=1)
            acc1 += np.sum(n1**q)
            acc2 += np.sum(n2**q)
            cnt += len(offsets)
            h = p.t[offsets + span] - p.t[offsets]
            if sup1 is None:
                sup1 = np.zeros_like(gamma_grid)
                sup2 = np.zeros_like(gamma_grid)
            for gi, gam in enumerate(gamma_grid):
                sup1[gi] = max(sup1[gi], float(np.max(n1 / h**gam)))
                sup2[gi] = max(sup2[gi], float(np.max(n2 / h ** (2 * gam))))
        spans.append(float(np.mean(h)))
        m1.append(acc1 / cnt)
        m2.append(acc2 / cnt)
    spans = np.asarray(spans)
    m1 = np.asarray(m1)
    m2 = np.asarray(m2)
    s1 = np.polyfit(np.log(spans), np.log(m1), 1)[0]
    s2 = np.polyfit(np.log(spans), np.log(m2), 1)[0]
    return HolderDiagnostics(
        q=q, spans=spans, level1_moments=m1, level2_moments=m2,
        level1_slope=float(s1), level2_slope=float(s2),
        gamma_grid=gamma_grid, level1_seminorm=sup1, level2_seminorm=sup2,
    )


def _fd_second_order(fields, y, a_j, eps=1e-6):
    """Finite-difference directional derivative of the field matrix along a_j."""
    return (fields(y + eps * a_j) - fields(y)) / eps


def solve_rde_step2(vector_fields, driver, y0, substep=1, field_derivative=None, project=None):
    """Step-2 Euler scheme along a level-2 driver.

    Per driver interval the state gains A(y) X_ts + (D A_k A_j)(y) XX_ts^{jk};
    `vector_fields(y)` returns the (dim_state, n_fields) matrix of field
    values, `field_derivative(y, a)` the directional derivative of that matrix
    along a state-space vector a (finite differences with step 1e-6 when not
    supplied).  `project` is an optional per-step constraint map.

    Local error is O(|t-s|^(3 gamma)) on smooth drivers; `substep` refines each
    interval through the canonical log-linear subdivision of its increment.
    """
    if substep < 1:
        raise ParameterError("substep must be >= 1")
    deriv = field_derivative or (lambda y, a: _fd_second_order(vector_fields, y, a))
    y = np.asarray(y0, dtype=float).copy()
    out = np.empty((len(driver), y.size))
    out[0] = y
    for i in range(len(driver) - 1):
        x_ts, xx_ts = driver.increment(i, i + 1)
        if substep == 1:
            pieces = [(x_ts, xx_ts)]
        else:
            k = substep
            delta = x_ts / k
            anti = 0.5 * (xx_ts - xx_ts.T)
            sub_xx = 0.5 * np.outer(delta, delta) + anti / (k * k)
            pieces = [(delta, sub_xx)] * k
        for xp, xxp in pieces:
            A = vector_fields(y)
            incr = A @ xp
            for j_ in range(driver.d):
                dA = deriv(y, A[:, j_])
                incr += dA @ xxp[j_, :]
            y = y + incr
            if not np.all(np.isfinite(y)):
                raise NumericalError("non-finite state in rough-path solve", step_index=i)
            if project is not None:
                y = project(y)
        out[i + 1] = y
    return out


def brownian_rough_ensemble(d, n_paths, n_grid, speed, seed, t_max=1.0):
    """Lifted Brownian paths at the given per-coordinate variance speed.

    Serves as the oracle lift against which rescaled kinetic ensembles are
    compared; uses the same piecewise-linear lift as any sampled path.
    """
    from .sde_core import NoiseStream

    dt = t_max / n_grid
    out = []
    for k in range(n_paths):
        stream = NoiseStream(seed, k)
        incr = stream.normals(n_grid * d).reshape(n_grid, d) * np.sqrt(speed * dt)
        path = np.concatenate([np.zeros((1, d)), np.cumsum(incr, axis=0)])
        out.append(lift_level2(path, t=np.linspace(0.0, t_max, n_grid + 1)))
    return out
