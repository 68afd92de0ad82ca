"""Univariate tail statistics and the shared data-table container.

Holds the building blocks the discovery and effect-estimation modules lean
on: order-statistic quantiles, pinball scores, the Hill estimator,
generalized Pareto fits for threshold excesses, runs declustering and a
calendar-year block bootstrap.  All estimators are deterministic given
their inputs; anything random takes an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import FitError, SampleSizeError

_MIN_EXCESSES = 10


# ---------------------------------------------------------------------------
# data container


@dataclass
class SeriesTable:
    """Multivariate sample: an (n, d) float array with optional date index.

    Parameters
    ----------
    values : ndarray, shape (n, d)
        Observations; NaN marks a missing cell.
    names : list of str
        Unique column names, one per variable.
    dates : ndarray of datetime64[D], optional
        Strictly increasing daily index aligned with the rows.
    """

    values: np.ndarray
    names: list
    dates: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        n, d = self.values.shape
        self.names = [str(c) for c in self.names]
        if len(self.names) != d:
            raise ValueError(f"{d} columns but {len(self.names)} names")
        if len(set(self.names)) != d:
            raise ValueError("column names must be unique")
        for k, name in enumerate(self.names):
            if not np.isfinite(self.values[:, k]).any():
                raise ValueError(f"column {name!r} has no observed values")
        if self.dates is not None:
            self.dates = np.asarray(self.dates, dtype="datetime64[D]")
            if self.dates.shape != (n,):
                raise ValueError("dates must align with rows")
            if n > 1 and not (self.dates[1:] > self.dates[:-1]).all():
                raise ValueError("dates must be strictly increasing")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column_index(self, key) -> int:
        if isinstance(key, str):
            try:
                return self.names.index(key)
            except ValueError:
                raise KeyError(f"no column named {key!r}") from None
        k = int(key)
        if not (0 <= k < self.d):
            raise KeyError(f"column index {k} out of range")
        return k

    def column(self, key) -> np.ndarray:
        """Column by name or 0-based index, missing cells included."""
        return self.values[:, self.column_index(key)]

    def column_observed(self, key) -> np.ndarray:
        """Column by name or 0-based index with missing cells dropped."""
        x = self.column(key)
        return x[np.isfinite(x)]

    def pair_complete(self, key_a, key_b):
        """The jointly observed rows of two columns."""
        a = self.column(key_a)
        b = self.column(key_b)
        keep = np.isfinite(a) & np.isfinite(b)
        return a[keep], b[keep]

    def complete_rows(self) -> np.ndarray:
        """Rows with every column observed."""
        return self.values[np.isfinite(self.values).all(axis=1)]

    def years(self) -> np.ndarray:
        if self.dates is None:
            raise ValueError("table has no date index")
        return self.dates.astype("datetime64[Y]").astype(int) + 1970

    def drop_column(self, key) -> "SeriesTable":
        k = self.column_index(key)
        keep = [c for c in range(self.d) if c != k]
        if not keep:
            raise ValueError("cannot drop the last column")
        names = [self.names[c] for c in keep]
        return SeriesTable(self.values[:, keep], names, self.dates)

    def take_rows(self, indices) -> "SeriesTable":
        """Row subset / resample.  The date index survives only if the
        selection keeps it strictly increasing (plain subsets do,
        bootstrap draws do not)."""
        idx = np.asarray(indices, dtype=int)
        dates = None
        if self.dates is not None and idx.size > 0:
            cand = self.dates[idx]
            if idx.size == 1 or (cand[1:] > cand[:-1]).all():
                dates = cand
        elif self.dates is not None and idx.size == 0:
            dates = self.dates[:0]
        return SeriesTable(self.values[idx], list(self.names), dates)


# ---------------------------------------------------------------------------
# order-statistic quantiles and scores


def empirical_quantile(x, tau: float) -> float:
    """Order-statistic quantile: the ceil(tau*n)-th smallest value.

    tau must lie strictly inside (0, 1); NaN input is rejected rather than
    silently dropped, callers deal with missing data explicitly.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a nonempty 1-D array")
    if np.isnan(x).any():
        raise ValueError("x contains NaN; drop missing values first")
    if not (0.0 < tau < 1.0):
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    k = math.ceil(tau * x.size)
    return float(np.sort(x, kind="stable")[k - 1])


def quantile_score(y, q: float, tau: float) -> float:
    """Mean pinball loss of the constant predictor q at level tau."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("empty sample")
    if not (0.0 < tau < 1.0):
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    u = y - q
    return float(np.mean(u * (tau - (u < 0.0))))


# ---------------------------------------------------------------------------
# Hill estimator


def default_hill_k(n_eff: int) -> int:
    """Default number of upper order statistics: floor(n^0.7), capped at n/5."""
    return max(5, min(int(n_eff**0.7), n_eff // 5))


def hill_estimate(x, k: int) -> float:
    """Hill tail-index estimate from the k largest observations.

    Mean of log-spacings between the top-k order statistics and the
    (k+1)-th largest value.  Requires 5 <= k < n and strictly positive
    order statistics down to that baseline.
    """
    x = np.asarray(x, dtype=float)
    if np.isnan(x).any():
        raise ValueError("x contains NaN; drop missing values first")
    n = x.size
    if k < 5:
        raise ValueError(f"k must be at least 5, got {k}")
    if k >= n:
        raise ValueError(f"k must be below the sample size, got k={k}, n={n}")
    s = np.sort(x, kind="stable")
    top = s[n - k :]
    base = s[n - k - 1]
    if base <= 0.0 or top[0] <= 0.0:
        raise ValueError("top-k order statistics must be strictly positive")
    return float(np.mean(np.log(top) - np.log(base)))


# ---------------------------------------------------------------------------
# generalized Pareto fit


@dataclass(frozen=True)
class TailFit:
    """Fitted generalized Pareto tail for excesses over a threshold."""

    xi: float
    sigma: float
    threshold: float
    n_exceed: int
    se_xi: float
    method: str = "mle"

    def cdf(self, z):
        """Distribution function of the excess Z = X - threshold."""
        z = np.asarray(z, dtype=float)
        if abs(self.xi) < 1e-12:
            out = 1.0 - np.exp(-np.clip(z, 0.0, None) / self.sigma)
        else:
            arg = 1.0 + self.xi * np.clip(z, 0.0, None) / self.sigma
            out = 1.0 - np.clip(arg, 0.0, None) ** (-1.0 / self.xi)
        return np.clip(out, 0.0, 1.0)

    def quantile(self, p):
        """Quantile of the excess distribution, p in [0, 1)."""
        p = np.asarray(p, dtype=float)
        if np.any((p < 0.0) | (p >= 1.0)):
            raise ValueError("p must lie in [0, 1)")
        if abs(self.xi) < 1e-12:
            return -self.sigma * np.log1p(-p)
        return self.sigma / self.xi * ((1.0 - p) ** (-self.xi) - 1.0)


def _gpd_nll(params, y):
    xi, log_sigma = params
    sigma = math.exp(log_sigma)
    if abs(xi) < 1e-9:
        return y.size * log_sigma + float(np.sum(y)) / sigma
    z = 1.0 + xi * y / sigma
    if np.any(z <= 0.0):
        return 1e10
    return y.size * log_sigma + (1.0 + 1.0 / xi) * float(np.sum(np.log(z)))


def _gpd_pwm(y):
    """Probability-weighted-moment estimates (shape, scale)."""
    s = np.sort(y, kind="stable")
    n = s.size
    b0 = float(np.mean(s))
    b1 = float(np.sum(s * (n - 1 - np.arange(n))) / (n * (n - 1)))
    denom = b0 - 2.0 * b1
    if denom <= 0.0:
        return None
    xi = 2.0 - b0 / denom
    sigma = b0 * (1.0 - xi)
    if sigma <= 0.0 or xi >= 1.0:
        return None
    return xi, sigma


def _gpd_se_xi(y, xi, sigma):
    """Standard error of xi from the observed information (numeric Hessian)."""
    h_xi = 1e-4 * max(1.0, abs(xi))
    h_sg = 1e-4 * sigma

    def nll(p):
        return _gpd_nll((p[0], math.log(p[1])), y)

    f0 = nll((xi, sigma))
    try:
        h11 = (nll((xi + h_xi, sigma)) - 2 * f0 + nll((xi - h_xi, sigma))) / h_xi**2
        h22 = (nll((xi, sigma + h_sg)) - 2 * f0 + nll((xi, sigma - h_sg))) / h_sg**2
        h12 = (
            nll((xi + h_xi, sigma + h_sg))
            - nll((xi + h_xi, sigma - h_sg))
            - nll((xi - h_xi, sigma + h_sg))
            + nll((xi - h_xi, sigma - h_sg))
        ) / (4 * h_xi * h_sg)
    except (OverflowError, ValueError):
        return float("nan")
    det = h11 * h22 - h12 * h12
    if not (np.isfinite(det) and det > 0.0 and h11 > 0.0):
        return float("nan")
    return math.sqrt(h22 / det)


def fit_gpd(excesses, threshold: float = 0.0) -> TailFit:
    """Fit a two-parameter generalized Pareto law to threshold excesses.

    Maximum likelihood via Nelder-Mead on (xi, log sigma), initialized at
    the probability-weighted-moment estimate; falls back to the PWM
    estimate itself (method flag ``"pwm"``) when the optimizer does not
    converge.  Deterministic given the input.

    Parameters
    ----------
    excesses : array_like
        Nonnegative excesses over the threshold, at least 10 of them.
    threshold : float
        Recorded in the result for downstream quantile arithmetic; the
        fit itself only sees the excesses.
    """
    y = np.asarray(excesses, dtype=float)
    if y.ndim != 1:
        raise ValueError("excesses must be 1-D")
    if np.isnan(y).any():
        raise ValueError("excesses contain NaN")
    if y.size < _MIN_EXCESSES:
        raise SampleSizeError(
            f"need at least {_MIN_EXCESSES} excesses, got {y.size}"
        )
    if np.any(y < 0.0):
        raise ValueError("excesses must be nonnegative")
    if float(np.max(y)) <= 0.0:
        raise ValueError("excesses are all zero")

    init = _gpd_pwm(y) or (0.1, 0.9 * float(np.mean(y)))
    x0 = np.array([init[0], math.log(init[1])])
    res = minimize(
        _gpd_nll,
        x0,
        args=(y,),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-10, "maxiter": 2000, "maxfev": 4000},
    )
    if res.success and np.isfinite(res.fun) and res.fun < 1e9:
        xi = float(res.x[0])
        sigma = float(math.exp(res.x[1]))
        method = "mle"
    else:
        pwm = _gpd_pwm(y)
        if pwm is None:
            raise FitError(
                "GPD likelihood optimization failed and no PWM fallback",
                {"status": res.status, "message": res.message, "nfev": res.nfev},
            )
        xi, sigma = pwm
        method = "pwm"
    if xi < 0.0 and float(np.max(y)) >= -sigma / xi:
        raise FitError(
            "fitted support excludes observed excesses",
            {"xi": xi, "sigma": sigma, "max_excess": float(np.max(y))},
        )
    return TailFit(
        xi=xi,
        sigma=sigma,
        threshold=float(threshold),
        n_exceed=int(y.size),
        se_xi=_gpd_se_xi(y, xi, sigma),
        method=method,
    )


# ---------------------------------------------------------------------------
# declustering and the year bootstrap


def decluster_runs(x, threshold: float, gap: int) -> list:
    """Runs declustering: one (index, maximum) per exceedance cluster.

    Exceedances separated by at least ``gap`` consecutive sub-threshold
    observations belong to distinct clusters; missing values count as
    sub-threshold.  Indices are 0-based row positions; on ties the first
    attaining observation wins.
    """
    x = np.asarray(x, dtype=float)
    if gap < 1:
        raise ValueError(f"gap must be >= 1, got {gap}")
    clusters = []
    below_run = None  # None until the first exceedance
    for t, v in enumerate(x):
        if np.isfinite(v) and v > threshold:
            if below_run is None or below_run >= gap:
                clusters.append((t, float(v)))
            elif v > clusters[-1][1]:
                clusters[-1] = (t, float(v))
            below_run = 0
        else:
            if below_run is not None:
                below_run += 1
    return clusters


def bootstrap_years(table: SeriesTable, seed) -> SeriesTable:
    """Resample calendar years with replacement and concatenate the draws.

    Draws as many years as the table contains, in draw order.  The output
    drops the date index (repeated years would collide); nested resampling
    downstream must therefore fall back to row-level schemes.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if table.dates is None:
        raise ValueError("year bootstrap needs a date index")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    years = table.years()
    uniq = np.unique(years)
    draws = rng.integers(0, uniq.size, size=uniq.size)
    rows = np.concatenate([np.flatnonzero(years == uniq[k]) for k in draws])
    return SeriesTable(table.values[rows], list(table.names), dates=None)
