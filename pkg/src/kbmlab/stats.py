"""Estimators turning long-time limit statements into pass/fail numbers.

EnsembleSummary is a mergeable accumulator (count, central moments up to
order four, fixed-edge histogram, extreme trackers); merging partial
summaries from disjoint path sets reproduces the summary of the union up to
floating-point round-off, so ensembles can be reduced in any order.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import InputError, ParameterError, StatisticsError

__all__ = [
    "EnsembleSummary",
    "FitReport",
    "ks_distance",
    "ks_two_sample",
    "invariant_density_mu_ell",
    "InvariantDensity",
    "ergodic_average",
    "escape_fit",
    "angle_convergence_check",
    "interpolation_check",
    "lyapunov_h2",
]


class EnsembleSummary:
    """Mergeable per-coordinate moments, histogram and sup-statistics."""

    def __init__(self, n_coords=1, bin_edges=None):
        self.n_coords = n_coords
        self.count = 0
        self.mean = np.zeros(n_coords)
        self.m2 = np.zeros(n_coords)
        self.m3 = np.zeros(n_coords)
        self.m4 = np.zeros(n_coords)
        self.min = np.full(n_coords, np.inf)
        self.max = np.full(n_coords, -np.inf)
        self.max_abs = np.zeros(n_coords)
        self.bin_edges = None if bin_edges is None else np.asarray(bin_edges, dtype=float)
        self.hist = (
            None if bin_edges is None else np.zeros((n_coords, len(self.bin_edges) - 1), dtype=np.int64)
        )
        self.merge_count = 0

    def update(self, samples):
        """Add samples of shape (n,) or (n, n_coords)."""
        x = np.asarray(samples, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[1] != self.n_coords:
            raise InputError(f"expected {self.n_coords} coordinates, got {x.shape[1]}")
        other = EnsembleSummary(self.n_coords, self.bin_edges)
        other.count = x.shape[0]
        other.mean = x.mean(axis=0)
        dev = x - other.mean
        other.m2 = np.sum(dev**2, axis=0)
        other.m3 = np.sum(dev**3, axis=0)
        other.m4 = np.sum(dev**4, axis=0)
        other.min = x.min(axis=0)
        other.max = x.max(axis=0)
        other.max_abs = np.abs(x).max(axis=0)
        if self.bin_edges is not None:
            for j in range(self.n_coords):
                other.hist[j], _ = np.histogram(x[:, j], bins=self.bin_edges)
        self.merge(other)
        return self

    def merge(self, other):
        """Fold another summary in; associative and commutative to round-off."""
        if other.count == 0:
            return self
        if self.count == 0:
            for name in ("count", "mean", "m2", "m3", "m4", "min", "max", "max_abs", "hist"):
                setattr(self, name, getattr(other, name))
            self.merge_count += 1
            return self
        na, nb = float(self.count), float(other.count)
        n = na + nb
        delta = other.mean - self.mean
        d_n = delta / n
        m2 = self.m2 + other.m2 + delta * d_n * na * nb
        m3 = (
            self.m3 + other.m3
            + delta * d_n**2 * na * nb * (na - nb)
            + 3.0 * d_n * (na * other.m2 - nb * self.m2)
        )
        m4 = (
            self.m4 + other.m4
            + delta * d_n**3 * na * nb * (na**2 - na * nb + nb**2)
            + 6.0 * d_n**2 * (na**2 * other.m2 + nb**2 * self.m2)
            + 4.0 * d_n * (na * other.m3 - nb * self.m3)
        )
        self.mean = self.mean + d_n * nb
        self.m2, self.m3, self.m4 = m2, m3, m4
        self.count = int(n)
        self.min = np.minimum(self.min, other.min)
        self.max = np.maximum(self.max, other.max)
        self.max_abs = np.maximum(self.max_abs, other.max_abs)
        if self.hist is not None and other.hist is not None:
            self.hist = self.hist + other.hist
        self.merge_count += 1
        return self

    def variance(self, ddof=0):
        if self.count <= ddof:
            raise StatisticsError("not enough samples for a variance")
        return self.m2 / (self.count - ddof)

    def fourth_moment(self):
        return self.m4 / self.count

    def standard_error(self):
        return np.sqrt(self.variance(ddof=1) / self.count)


@dataclass(frozen=True)
class FitReport:
    slope: float
    intercept: float
    residual_rms: float
    ci95_halfwidth: float
    model: str = "power_in_t"
    n_points: int = 0

    def __post_init__(self):
        if self.residual_rms < 0:
            raise StatisticsError("residual RMS must be non-negative")


def ks_distance(samples, cdf):
    """Exact sup distance between the empirical CDF of sorted samples and cdf."""
    x = np.asarray(samples, dtype=float)
    if x.size < 50:
        raise StatisticsError("Kolmogorov-Smirnov needs at least 50 samples")
    if np.any(np.diff(x) < 0):
        raise InputError("samples must be sorted ascending")
    n = x.size
    F = np.asarray(cdf(x), dtype=float)
    upper = np.max(np.arange(1, n + 1) / n - F)
    lower = np.max(F - np.arange(0, n) / n)
    return float(max(upper, lower))


def ks_two_sample(a, b):
    """Two-sample sup distance between empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    allv = np.concatenate([a, b])
    fa = np.searchsorted(a, allv, side="right") / a.size
    fb = np.searchsorted(b, allv, side="right") / b.size
    return float(np.abs(fa - fb).max())


@dataclass
class InvariantDensity:
    """Normalized stationary density of the radial velocity on (-1, 1)."""

    ell: float
    sigma: float
    d: int
    mean: float
    _grid: np.ndarray
    _cdf: np.ndarray
    _log_norm: float

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        expo = 0.5 * (self.d - 3)
        out = np.zeros_like(x)
        inside = np.abs(x) < 1.0
        xi = x[inside]
        out[inside] = np.exp(
            expo * np.log1p(-xi * xi) + 2.0 * self.ell * xi / self.sigma**2 - self._log_norm
        )
        return out

    def cdf(self, x):
        return np.interp(np.asarray(x, dtype=float), self._grid, self._cdf, left=0.0, right=1.0)

    def sample_quantiles(self, probs):
        return np.interp(np.asarray(probs, dtype=float), self._cdf, self._grid)


def invariant_density_mu_ell(ell, sigma, d, n_grid=10**4):
    """Stationary law of rdot when f'/f is constant: density on (-1, 1)
    proportional to (1 - x^2)^((d-3)/2) exp(2 ell x / sigma^2)."""
    if d < 3:
        raise ParameterError("the stationary family needs d >= 3")
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    expo = 0.5 * (d - 3)
    scale = 2.0 * ell / sigma**2

    def raw(x):
        return (1.0 - x * x) ** expo * math.exp(scale * x)

    Z, err = quad(raw, -1.0, 1.0, limit=200)
    mean_num, _ = quad(lambda x: x * raw(x), -1.0, 1.0, limit=200)
    grid = np.linspace(-1.0, 1.0, n_grid)
    vals = np.empty_like(grid)
    inner = np.abs(grid) < 1.0
    vals[inner] = np.exp(expo * np.log1p(-grid[inner] ** 2) + scale * grid[inner])
    vals[~inner] = [raw(g) for g in grid[~inner]]
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]
    return InvariantDensity(
        ell=float(ell), sigma=float(sigma), d=int(d),
        mean=float(mean_num / Z), _grid=grid, _cdf=cdf, _log_norm=float(np.log(Z)),
    )


def _observable_values(traj, observable):
    if isinstance(observable, str):
        return traj.columns[observable]
    return np.asarray(observable(traj.columns), dtype=float)


def ergodic_average(traj, observable, burn_in=0.2):
    """Time average of an observable over recorded samples after burn-in.

    `observable` is either a column name or a callable on the column dict
    returning one value per recorded sample.
    """
    if not 0.0 <= burn_in <= 0.9:
        raise ParameterError("burn_in must lie in [0, 0.9]")
    vals = _observable_values(traj, observable)
    start = int(np.floor(burn_in * len(vals)))
    if len(vals) - start < 10:
        raise StatisticsError("too few post-burn-in samples")
    return float(np.mean(vals[start:]))


def escape_fit(traj, model="power_in_t", tail_fraction=0.8):
    """Least-squares escape-rate fit on the last `tail_fraction` of the range.

    power_in_t : log r ~ slope log t      (slope = escape exponent)
    linear_in_t: r ~ slope t              (slope = ballistic rate)
    log        : r ~ slope log t
    """
    r = traj.array("r")
    t = traj.t
    if r[-1] < 10.0 * r[0]:
        raise StatisticsError(
            f"trajectory not transient enough for an escape fit (r_T/r_0 = {r[-1] / r[0]:.2f})"
        )
    start = int(np.floor((1.0 - tail_fraction) * len(t)))
    start = max(start, 1)
    tt, rr = t[start:], r[start:]
    if model == "power_in_t":
        xs, ys = np.log(tt), np.log(rr)
    elif model == "linear_in_t":
        xs, ys = tt, rr
    elif model == "log":
        xs, ys = np.log(tt), rr
    else:
        raise ParameterError(f"unknown escape model '{model}'")
    A = np.column_stack([xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    n = len(xs)
    sxx = float(np.sum((xs - xs.mean()) ** 2))
    se = rms / np.sqrt(sxx) if sxx > 0 else np.inf
    return FitReport(
        slope=float(coef[0]), intercept=float(coef[1]), residual_rms=rms,
        ci95_halfwidth=float(1.96 * se), model=model, n_points=n,
    )


def angle_convergence_check(traj, clock, tail_start=0.5):
    """Tail Cauchy statistic of the angle plus the tail clock increment.

    cauchy_sup = max over t >= tail_start*T of |theta_t - theta_{tail_start*T}|;
    clock_increment = C_T - C_{tail_start*T}.
    """
    d = traj.d
    theta = traj.stack([f"theta_{i}" for i in range(1, d + 1)])
    i0 = int(np.floor(tail_start * (len(traj) - 1)))
    dev = np.linalg.norm(theta[i0:] - theta[i0], axis=1)
    cauchy_sup = float(dev.max())
    t0 = traj.t[i0]
    clock_increment = clock.increment(t0)
    return {"cauchy_sup": cauchy_sup, "clock_increment": clock_increment, "tail_start_time": float(t0)}


def interpolation_check(terminal, d, sigma, n_bins=None):
    """Distributional checks of the rescaled ensemble at time 1.

    `terminal` holds X^sigma_1 for every path, shape (n, d).  Returns
    per-coordinate variances (target 4/(d(d-1))), off-diagonal covariances
    with standard errors, and the KS distance of the first marginal against
    the centered normal with that variance.
    """
    X = np.asarray(terminal, dtype=float)
    n = X.shape[0]
    if n < 1000:
        raise StatisticsError("interpolation check needs at least 1000 paths")
    target = 4.0 / (d * (d - 1))
    var = X.var(axis=0, ddof=1)
    cov = np.cov(X.T)
    off = []
    for i in range(d):
        for j in range(i + 1, d):
            se = np.sqrt((cov[i, i] * cov[j, j] + cov[i, j] ** 2) / (n - 1))
            off.append({"pair": (i + 1, j + 1), "cov": float(cov[i, j]), "se": float(se)})
    from scipy.stats import norm

    marg = np.sort(X[:, 0])
    ks = ks_distance(marg, lambda x: norm.cdf(x, scale=np.sqrt(target)))
    return {
        "variance": var,
        "variance_target": target,
        "off_diagonal": off,
        "ks_first_marginal": float(ks),
    }


def lyapunov_h2(traj, sigma, tail_decade=0.9):
    """Exponential decay rate of y, its quadrature prediction, and x tail wobble."""
    if traj.kind != "h2":
        raise ParameterError("lyapunov check expects a half-plane trajectory")
    logy = traj.array("logy")
    T = traj.T
    empirical = float((logy[-1] - logy[0]) / T)

    def weight(x):
        return math.exp(-2.0 * x / sigma**2) / math.sqrt(1.0 - x * x)

    Z, _ = quad(weight, -1.0, 1.0, limit=200)
    num, _ = quad(lambda x: x * weight(x), -1.0, 1.0, limit=200)
    prediction = num / Z

    x = traj.array("x")
    i0 = int(np.floor(tail_decade * (len(x) - 1)))
    tail_osc = float(np.abs(x[i0:] - x[-1]).max())
    return {
        "empirical_exponent": empirical,
        "prediction": float(prediction),
        "x_tail_oscillation": tail_osc,
    }
