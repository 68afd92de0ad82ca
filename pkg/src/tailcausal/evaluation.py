"""Comparison of estimated and true causal structures.

The discovery methods all report a reachability matrix.  The distance
between an estimated matrix and the actual one is the number of
off-diagonal cells where they disagree; diagonals are excluded because
every vertex trivially reaches itself.  Uncertainty in the distance is
assessed by re-running a discovery pipeline on year-bootstrapped data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import FitError, NumericError, SampleSizeError
from .tailstats import SeriesTable, bootstrap_years

__all__ = [
    "StructureComparison",
    "StructureCi",
    "reachability_distance",
    "bootstrap_structure_ci",
]


@dataclass(frozen=True)
class StructureComparison:
    """Disagreement between two reachability matrices.

    ``mismatches`` lists the 1-based off-diagonal cells (i, j) where the
    matrices differ, in row-major order; ``distance`` is their count.
    """

    distance: int
    mismatches: tuple[tuple[int, int], ...]
    d: int

    def __post_init__(self) -> None:
        if self.distance != len(self.mismatches):
            raise ValueError("distance must equal the number of mismatched cells")
        for i, j in self.mismatches:
            if i == j:
                raise ValueError(f"diagonal cell ({i}, {i}) cannot mismatch")
            if not (1 <= i <= self.d and 1 <= j <= self.d):
                raise ValueError(f"cell ({i}, {j}) outside a {self.d}-vertex matrix")


def _as_reachability(r: Sequence, name: str) -> np.ndarray:
    arr = np.asarray(r)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 entries")
    return arr.astype(int)


def reachability_distance(r_est: Sequence, r_true: Sequence) -> StructureComparison:
    """Count off-diagonal cells where two reachability matrices differ.

    Diagonal entries are ignored, so matrices that encode self-reach as
    1 and as 0 compare identically.
    """
    est = _as_reachability(r_est, "r_est")
    true = _as_reachability(r_true, "r_true")
    if est.shape != true.shape:
        raise ValueError(
            f"dimension mismatch: {est.shape[0]} vs {true.shape[0]} vertices"
        )
    d = est.shape[0]
    diff = est != true
    np.fill_diagonal(diff, False)
    cells = tuple((int(i) + 1, int(j) + 1) for i, j in np.argwhere(diff))
    return StructureComparison(distance=len(cells), mismatches=cells, d=d)


@dataclass(frozen=True)
class StructureCi:
    """Percentile interval of the structure distance over bootstrap runs."""

    ci_low: float
    ci_high: float
    n_boot_effective: int
    distances: tuple[int, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if self.ci_low > self.ci_high:
            raise ValueError("interval endpoints out of order")


def bootstrap_structure_ci(
    pipeline: Callable[[SeriesTable], Sequence],
    table: SeriesTable,
    truth: Sequence,
    n_boot: int = 300,
    seed: int | None = None,
) -> StructureCi:
    """95% percentile interval of the distance to ``truth`` under year bootstrap.

    ``pipeline`` maps a SeriesTable to an estimated reachability matrix;
    it is re-run on ``n_boot`` year-resampled copies of ``table``.
    Replicates that fail to fit are dropped, but more than 10% failures
    abort the whole computation.  A ``seed`` is required: replicate r
    draws from ``default_rng([seed, r])``, so results are reproducible
    and extending ``n_boot`` preserves earlier replicates.
    """
    truth_arr = _as_reachability(truth, "truth")
    if table.dates is None:
        raise ValueError("bootstrap_structure_ci needs a date-indexed table")
    if seed is None:
        raise ValueError("seed is required")
    if n_boot < 10:
        raise ValueError(f"n_boot must be at least 10, got {n_boot}")

    distances: list[int] = []
    failures = 0
    for rep in range(n_boot):
        rng = np.random.default_rng([seed, rep])
        resampled = bootstrap_years(table, rng)
        try:
            est = pipeline(resampled)
            distances.append(reachability_distance(est, truth_arr).distance)
        except (ValueError, SampleSizeError, FitError, NumericError):
            failures += 1
    if failures > 0.1 * n_boot:
        raise FitError(
            "too many bootstrap replicates failed",
            diagnostics={"failures": failures, "n_boot": n_boot},
        )
    lo, hi = np.quantile(np.asarray(distances, dtype=float), [0.025, 0.975])
    return StructureCi(
        ci_low=float(lo),
        ci_high=float(hi),
        n_boot_effective=len(distances),
        distances=tuple(distances),
    )
