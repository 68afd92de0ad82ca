"""Extremal quantile treatment effects.

Pipeline: a sieve-style logistic propensity model turns observational
treatment data into inverse-propensity weights; weighted order
statistics give the intermediate quantile of each arm at level
1 - tau_n; weighted Hill estimators give each arm's tail shape; the
quantile is then extrapolated from tau_n down to the target level p_n
by the Pareto-tail identity q(1-p) = q(1-tau) (tau/p)^xi. The
treatment effect is the difference of the two extrapolated quantiles,
with uncertainty from an i.i.d. row bootstrap that refits everything
per replicate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import FitError, NumericError, SampleSizeError

PROP_CLIP = (0.01, 0.99)


@dataclass(frozen=True)
class TreatmentSample:
    """Outcomes, binary treatment, and covariates, row-aligned.

    Outcomes must be strictly positive; the tail estimators work on
    log scale. Covariates may be empty (shape (n, 0)) for randomized
    designs without observed confounders. A single-armed sample is
    accepted here so that one-arm tail identities can be exercised;
    the estimators that need both arms reject it themselves.
    """

    y: np.ndarray
    d: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        d = np.asarray(self.d, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 1 or y.size == 0:
            raise ValueError("y must be a nonempty 1-D array")
        if not np.isfinite(y).all() or (y <= 0).any():
            raise ValueError("outcomes must be finite and strictly positive")
        if d.shape != y.shape:
            raise ValueError("d must align with y")
        if not np.isin(d, (0.0, 1.0)).all():
            raise ValueError("treatment indicators must be 0 or 1")
        if x.ndim != 2 or x.shape[0] != y.size:
            raise ValueError("x must be a 2-D array with one row per outcome")
        if x.size and not np.isfinite(x).all():
            raise ValueError("covariates must be finite")
        for name, arr in (("y", y), ("d", d), ("x", x)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def r(self) -> int:
        return self.x.shape[1]

    @property
    def n_treated(self) -> int:
        return int(self.d.sum())


@dataclass(frozen=True)
class QteEstimate:
    """Extrapolated quantile treatment effect with its ingredients."""

    qte: float
    q1_int: float
    q0_int: float
    xi1: float
    xi0: float
    tau_n: float
    p_n: float
    ci: tuple | None = None
    boot_failures: int | None = None

    def __post_init__(self):
        if not 0.0 < self.p_n < self.tau_n < 1.0:
            raise ValueError("need 0 < p_n < tau_n < 1")
        if not (self.q1_int > 0 and self.q0_int > 0):
            raise ValueError("intermediate quantiles must be positive")
        if self.ci is not None:
            lo, hi = self.ci
            if not lo <= hi:
                raise ValueError("ci must be ordered")
            object.__setattr__(self, "ci", (float(lo), float(hi)))


def _monomial_exponents(r: int, degree: int):
    exps = [
        e
        for e in itertools.product(range(degree + 1), repeat=r)
        if 1 <= sum(e) <= degree
    ]
    return sorted(exps, key=lambda e: (sum(e), e))


class Propensity:
    """Fitted polynomial-basis logistic model of treatment assignment.

    Calling it on an (m, r) covariate block returns propensities
    clipped to PROP_CLIP; n_clipped counts how many training points
    the clipping touched.
    """

    def __init__(self, degree, exponents, keep, centers, scales, coef, n_clipped):
        self.degree = int(degree)
        self.exponents = tuple(exponents)
        self.keep = np.asarray(keep, dtype=bool)
        self.centers = np.asarray(centers, dtype=float)
        self.scales = np.asarray(scales, dtype=float)
        self.coef = np.asarray(coef, dtype=float)
        self.n_clipped = int(n_clipped)

    def _design(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise ValueError("covariates must form a 2-D array")
        if self.exponents and x.shape[1] != len(self.exponents[0]):
            raise ValueError(
                f"expected {len(self.exponents[0])} covariate columns, "
                f"got {x.shape[1]}"
            )
        cols = [np.prod(x**np.array(e), axis=1) for e in self.exponents]
        raw = np.column_stack(cols) if cols else np.empty((x.shape[0], 0))
        raw = raw[:, self.keep]
        std = (raw - self.centers) / self.scales
        return np.column_stack([np.ones(x.shape[0]), std])

    def __call__(self, x):
        eta = self._design(x) @ self.coef
        return np.clip(expit(eta), *PROP_CLIP)


def estimate_propensity(sample: TreatmentSample, basis_degree: int = 2) -> Propensity:
    """Logistic propensity fit on a polynomial covariate basis.

    Newton iterations (iteratively reweighted least squares) run to a
    mean-gradient sup-norm of 1e-8. Perfect or near-perfect separation
    shows up as diverging coefficients or a singular weighted design;
    both raise FitError, and a lower basis_degree is the usual remedy.
    """
    if basis_degree < 0:
        raise ValueError("basis_degree must be nonnegative")
    n1 = sample.n_treated
    if min(n1, sample.n - n1) < 30:
        raise SampleSizeError("need at least 30 observations in each arm")
    exps = _monomial_exponents(sample.r, basis_degree)
    cols = [np.prod(sample.x**np.array(e), axis=1) for e in exps]
    raw = np.column_stack(cols) if cols else np.empty((sample.n, 0))
    centers = raw.mean(axis=0) if raw.size else np.empty(0)
    scales = raw.std(axis=0) if raw.size else np.empty(0)
    keep = scales > 1e-12
    centers, scales = centers[keep], scales[keep]
    std = (raw[:, keep] - centers) / scales
    design = np.column_stack([np.ones(sample.n), std])

    beta = np.zeros(design.shape[1])
    d = sample.d
    for _ in range(100):
        eta = design @ beta
        if not np.isfinite(eta).all() or np.abs(eta).max() > 40.0:
            raise FitError(
                "propensity fit diverged (separation?); try a lower basis_degree"
            )
        p = expit(eta)
        grad = design.T @ (d - p) / sample.n
        if np.abs(grad).max() <= 1e-8:
            break
        w = p * (1.0 - p)
        hess = design.T @ (design * w[:, None]) / sample.n
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise FitError(
                "singular design in propensity fit; try a lower basis_degree"
            ) from None
        beta = beta + step
    else:
        raise FitError(
            "propensity fit did not converge in 100 iterations; "
            "try a lower basis_degree"
        )
    fitted = expit(design @ beta)
    n_clipped = int(((fitted < PROP_CLIP[0]) | (fitted > PROP_CLIP[1])).sum())
    return Propensity(basis_degree, exps, keep, centers, scales, beta, n_clipped)


def _arm_weights(sample: TreatmentSample, prop, arm: int) -> np.ndarray:
    if arm not in (0, 1):
        raise ValueError("arm must be 0 or 1")
    pi = np.asarray(prop(sample.x), dtype=float)
    if pi.shape != (sample.n,):
        raise ValueError("propensity must return one value per row")
    if not np.isfinite(pi).all() or (pi < 0).any() or (pi > 1).any():
        raise NumericError("propensity values must lie in [0, 1]")
    d = sample.d
    if arm == 1:
        if (pi[d == 1] == 0).any():
            raise NumericError("zero propensity on a treated unit")
        return np.where(d == 1, d / np.where(pi > 0, pi, 1.0), 0.0)
    if (pi[d == 0] == 1).any():
        raise NumericError("unit propensity on a control unit")
    return np.where(d == 0, (1.0 - d) / np.where(pi < 1, 1.0 - pi, 1.0), 0.0)


def _weighted_quantile(y, w, tau: float) -> float:
    """Smallest y at which the normalized weight mass reaches tau.

    This is the exact minimizer of the weighted pinball loss. Weights
    are rescaled by their maximum first; the minimizer is invariant to
    positive scaling, and the rescaling makes the constant-weight case
    reduce to integer arithmetic, hence exactly the order-statistic
    quantile.
    """
    pos = w > 0
    if not pos.any():
        raise NumericError("all weights vanish")
    ys = y[pos]
    ws = w[pos] / w[pos].max()
    order = np.argsort(ys, kind="stable")
    ys = ys[order]
    cum = np.cumsum(ws[order])
    idx = int(np.searchsorted(cum, tau * cum[-1], side="left"))
    return float(ys[min(idx, ys.size - 1)])


def adjusted_quantile(sample: TreatmentSample, prop, tau: float, arm: int) -> float:
    """Inverse-propensity-weighted tau-quantile of one arm's outcomes."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    w = _arm_weights(sample, prop, arm)
    if w.sum() < 30.0:
        raise SampleSizeError(
            f"effective sample size {w.sum():.1f} in arm {arm}, need 30"
        )
    return _weighted_quantile(sample.y, w, tau)


def causal_hill(sample: TreatmentSample, prop, tau_n: float, arm: int) -> float:
    """Weighted Hill shape of one arm's tail above its adjusted quantile.

    Averages w_j (log Y_j - log q_hat) over the exceedances of the
    arm's adjusted (1 - tau_n)-quantile, normalized by n tau_n; with
    unit weights this is the standard Hill estimator. Exceedances are
    summed in ascending outcome order so the reduction is reproducible
    to the last bit.
    """
    if not 0.0 < tau_n < 1.0:
        raise ValueError(f"tau_n must be in (0, 1), got {tau_n}")
    w = _arm_weights(sample, prop, arm)
    q = adjusted_quantile(sample, prop, 1.0 - tau_n, arm)
    if q <= 0:
        raise NumericError("intermediate quantile must be positive")
    exceed = (sample.y > q) & (w > 0)
    if int(exceed.sum()) < 20:
        raise SampleSizeError(
            f"{int(exceed.sum())} weighted exceedances in arm {arm}, need 20"
        )
    ye, we = sample.y[exceed], w[exceed]
    order = np.argsort(ye, kind="stable")
    terms = (np.log(ye[order]) - np.log(q)) * we[order]
    return float(np.sum(terms) / (sample.n * tau_n))


def extremal_qte(
    sample: TreatmentSample, prop, tau_n: float = 0.05, p_n: float = 0.005
) -> QteEstimate:
    """Treatment effect at the far quantile level 1 - p_n.

    Each arm's intermediate quantile is extrapolated down to p_n with
    its own causal Hill shape, and the effect is the difference. p_n
    may sit far beyond the range where empirical quantiles exist; that
    is the point of the extrapolation.
    """
    if not 0.0 < p_n < tau_n < 1.0:
        raise ValueError("need 0 < p_n < tau_n < 1")
    q1 = adjusted_quantile(sample, prop, 1.0 - tau_n, 1)
    q0 = adjusted_quantile(sample, prop, 1.0 - tau_n, 0)
    xi1 = causal_hill(sample, prop, tau_n, 1)
    xi0 = causal_hill(sample, prop, tau_n, 0)
    ratio = tau_n / p_n
    qte = q1 * ratio**xi1 - q0 * ratio**xi0
    return QteEstimate(float(qte), q1, q0, xi1, xi0, tau_n, p_n)


def qte_bootstrap(
    sample: TreatmentSample,
    basis_degree: int = 2,
    tau_n: float = 0.05,
    p_n: float = 0.005,
    n_boot: int = 300,
    seed: int = None,
) -> QteEstimate:
    """Point estimate plus percentile bootstrap interval.

    Rows are resampled i.i.d. and the whole chain, propensity
    included, is refitted per replicate. Replicates that fail (thin
    arms, separation) are dropped and counted; more than 10% failures
    aborts. Deterministic per seed, and replicate streams extend
    prefix-stably when n_boot grows.
    """
    if seed is None:
        raise ValueError("seed is required; the bootstrap is stochastic")
    if n_boot < 10:
        raise ValueError("n_boot must be at least 10")
    prop = estimate_propensity(sample, basis_degree)
    point = extremal_qte(sample, prop, tau_n, p_n)
    draws = []
    failures = 0
    for rep in range(n_boot):
        rng = np.random.default_rng([seed, rep])
        rows = rng.integers(0, sample.n, sample.n)
        try:
            bs = TreatmentSample(sample.y[rows], sample.d[rows], sample.x[rows])
            bprop = estimate_propensity(bs, basis_degree)
            draws.append(extremal_qte(bs, bprop, tau_n, p_n).qte)
        except (ValueError, SampleSizeError, FitError, NumericError):
            failures += 1
    if failures > 0.1 * n_boot:
        raise FitError(
            f"{failures} of {n_boot} bootstrap replicates failed",
            diagnostics={"failures": failures, "n_boot": n_boot},
        )
    lo, hi = np.quantile(draws, [0.025, 0.975])
    return QteEstimate(
        point.qte,
        point.q1_int,
        point.q0_int,
        point.xi1,
        point.xi0,
        tau_n,
        p_n,
        ci=(float(lo), float(hi)),
        boot_failures=failures,
    )
