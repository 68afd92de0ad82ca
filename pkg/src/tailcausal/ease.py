"""Causal order discovery from extremal rank averages.

The workhorse is the causal tail coefficient of an ordered pair (j, k):
the limiting mean rank of X_k on rows where X_j is extreme. When j is
an ancestor of k every large shock in j propagates forward, so the
coefficient is exactly one; against the causal direction it stays below
one, and for ancestrally unrelated pairs it settles at one half. The
full pairwise matrix therefore encodes the causal order, and a greedy
max-min selection reads the order back out.

Population values are available in closed form for linear models with
positive path coefficients. For data there is a rank-based estimator
with no tuning beyond the exceedance count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import NumericError, SampleSizeError
from .graphs import reachability
from .models import CoefMatrix, WeightedDag, linear_noise_coefficients
from .tailstats import SeriesTable


@dataclass(frozen=True)
class GammaMatrix:
    """Pairwise causal tail coefficients, diagonal left undefined.

    entries[j-1, k-1] holds the coefficient of the ordered pair (j, k).
    k_used counts per-pair exceedances for estimated matrices and is
    None for population ones.
    """

    entries: np.ndarray
    k_used: np.ndarray | None = None

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float).copy()
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be a square matrix")
        np.fill_diagonal(entries, np.nan)
        off = ~np.eye(entries.shape[0], dtype=bool)
        if not np.isfinite(entries[off]).all():
            raise ValueError("off-diagonal entries must be finite")
        if (entries[off] < -1e-12).any() or (entries[off] > 1 + 1e-12).any():
            raise ValueError("entries must lie in [0, 1]")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        if self.k_used is not None:
            k_used = np.asarray(self.k_used, dtype=int)
            if k_used.shape != entries.shape:
                raise ValueError("k_used must match the entry shape")
            if (k_used[off] < 10).any():
                raise ValueError("need at least 10 exceedances per pair")
            k_used = k_used.copy()
            k_used.flags.writeable = False
            object.__setattr__(self, "k_used", k_used)

    @property
    def d(self) -> int:
        return self.entries.shape[0]


def gamma_population(wd: WeightedDag) -> GammaMatrix:
    """Closed-form coefficient matrix of a linear model.

    Entry (j, k) is 1/2 plus half the share of X_j's noise-coefficient
    mass contributed by ancestors it shares with X_k. Shared mass equal
    to the full mass happens exactly when every ancestor of j also
    reaches k, which is the ancestor relation itself, so the entry is
    exactly one in the causal direction.

    Only positive noise coefficients are supported; with signed ones
    the shares stop being probabilities and the closed form does not
    apply, so such models route to the empirical estimator instead.
    """
    if wd.kind != "linear":
        raise ValueError("population coefficients are defined for kind 'linear'")
    bprime = linear_noise_coefficients(wd).entries
    anc = reachability(wd.dag).astype(bool)  # anc[h, j]: h reaches j
    d = wd.d
    if (bprime[anc] <= 0).any():
        raise NumericError(
            "closed form needs positive noise coefficients on all ancestor "
            "pairs; use gamma_estimate on simulated or observed data instead"
        )
    out = np.full((d, d), np.nan)
    for j in range(d):
        mass = bprime[anc[:, j], j].sum()
        for k in range(d):
            if k == j:
                continue
            shared = bprime[anc[:, j] & anc[:, k], j].sum()
            out[j, k] = 0.5 + 0.5 * shared / mass
    return GammaMatrix(out)


def _exceedance_count(n: int, k_frac) -> int:
    if k_frac is None:
        return min(max(math.ceil(n ** (2.0 / 3.0)), 50), n)
    k_frac = float(k_frac)
    if not 0.0 < k_frac <= 1.0:
        raise ValueError("k_frac must lie in (0, 1]")
    return math.ceil(k_frac * n)


def gamma_estimate(x_j, x_k, k_frac=None) -> float:
    """Rank-based estimate of the causal tail coefficient of (j, k).

    Mean of the empirical CDF values rank/(n+1) of x_k over the top
    exceedance rows of x_j. Both ranks and exceedances are taken on the
    jointly observed subsample, so the estimate only sees the pair.

    k_frac fixes the exceedance fraction; by default the count grows
    like n^(2/3) with a floor of 50. Requires 100 joint observations
    and at least 10 exceedances.
    """
    x_j = np.asarray(x_j, dtype=float)
    x_k = np.asarray(x_k, dtype=float)
    if x_j.shape != x_k.shape or x_j.ndim != 1:
        raise ValueError("columns must be one-dimensional and equally long")
    keep = np.isfinite(x_j) & np.isfinite(x_k)
    x_j, x_k = x_j[keep], x_k[keep]
    n = x_j.size
    if n < 100:
        raise SampleSizeError(f"need 100 joint observations, have {n}")
    k = _exceedance_count(n, k_frac)
    if k < 10:
        raise SampleSizeError(f"exceedance count {k} is below 10")
    cdf = rankdata(x_k) / (n + 1.0)
    top = np.argsort(-x_j, kind="stable")[:k]
    return float(cdf[top].mean())


def gamma_matrix(table: SeriesTable, k_frac=None) -> GammaMatrix:
    """Estimate the full pairwise coefficient matrix of a table."""
    d = table.d
    entries = np.full((d, d), np.nan)
    k_used = np.zeros((d, d), dtype=int)
    for j in range(d):
        for k in range(d):
            if j == k:
                continue
            a, b = table.pair_complete(j, k)
            entries[j, k] = gamma_estimate(a, b, k_frac)
            k_used[j, k] = _exceedance_count(a.size, k_frac)
    np.fill_diagonal(k_used, 10)  # placeholder; diagonal is undefined
    return GammaMatrix(entries, k_used)


def ease_order(gamma: GammaMatrix) -> tuple:
    """Greedy causal order from a coefficient matrix.

    Repeatedly emits the unplaced node whose worst pairwise margin
    (its coefficient toward another unplaced node minus the reverse)
    is largest. A source has margin >= 0 against everyone, because its
    forward coefficients are one, so it wins the round; ties go to the
    smallest label. The last node is emitted unconditionally.
    """
    g = gamma.entries
    remaining = list(range(gamma.d))
    order = []
    while remaining:
        if len(remaining) == 1:
            order.append(remaining.pop())
            break
        best = None
        best_margin = -np.inf
        for i in remaining:
            margin = min(g[i, j] - g[j, i] for j in remaining if j != i)
            if margin > best_margin:
                best, best_margin = i, margin
        order.append(best)
        remaining.remove(best)
    return tuple(v + 1 for v in order)


def ease_reachability(
    gamma: GammaMatrix, order, edge_threshold: float = 0.1
) -> CoefMatrix:
    """Threshold the coefficient matrix into a reachability estimate.

    A cell (i, j) is set when i precedes j in the order and the
    coefficient of (i, j) is within edge_threshold of one. The order
    argument keeps the output antisymmetric even when both directions
    score high.
    """
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(1, gamma.d + 1)):
        raise ValueError("order must be a permutation of 1..d")
    position = {v: p for p, v in enumerate(order)}
    r = np.eye(gamma.d, dtype=int)
    for i in range(1, gamma.d + 1):
        for j in range(1, gamma.d + 1):
            if i == j or position[i] > position[j]:
                continue
            if gamma.entries[i - 1, j - 1] >= 1.0 - edge_threshold:
                r[i - 1, j - 1] = 1
    return CoefMatrix(r.astype(float), "reachability", meta={"method": "ease"})
