"""End-to-end discovery runs on observation tables.

Each pipeline wires the estimation primitives of one method into a
uniform result: a score matrix, an estimated reachability matrix, and
whatever intermediate the method naturally produces (an order, a fitted
DAG, per-pair bootstrap intervals). The CLI and the bootstrap distance
machinery both work through these entry points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .causev import DEFAULT_TAU_GRID, causev_direction
from .ease import ease_order, ease_reachability, gamma_matrix
from .errors import FitError, NumericError, SampleSizeError, TailCausalError
from .graphs import Dag, reachability, topological_order
from .rmlm import (
    min_arborescence,
    reconstruct_ml_from_scalings,
    rmlm_reachability,
    spectral_scalings,
    tree_scores,
)
from .tailstats import (
    SeriesTable,
    TailFit,
    decluster_runs,
    empirical_quantile,
    fit_gpd,
)

__all__ = [
    "DiscoveryResult",
    "ease_pipeline",
    "causev_pipeline",
    "rmlm_pipeline",
    "tree_pipeline",
    "fit_tails",
    "make_structure_pipeline",
]


@dataclass(frozen=True, eq=False)
class DiscoveryResult:
    """Uniform output of a structure discovery run.

    scores holds the method's native d x d matrix (tail coefficients,
    direction scores, standardized coefficients, or tree weights) with
    undefined cells as NaN. reachability is 0/1 with unit diagonal.
    order is 1-based and source-first when the method produces one,
    cells carries per-pair detail for pairwise methods, and meta echoes
    the tuning actually used.
    """

    method: str
    names: tuple[str, ...]
    scores: np.ndarray
    score_kind: str
    reach: np.ndarray
    order: tuple[int, ...] | None = None
    cells: dict | None = None
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.names)


def ease_pipeline(
    table: SeriesTable, k_frac: float | None = None, edge_threshold: float = 0.1
) -> DiscoveryResult:
    """Order the variables by extremal ancestry and threshold the edges."""
    gamma = gamma_matrix(table, k_frac)
    order = ease_order(gamma)
    reach = ease_reachability(gamma, order, edge_threshold)
    return DiscoveryResult(
        method="ease",
        names=tuple(table.names),
        scores=gamma.entries,
        score_kind="gamma",
        reach=reach.entries.astype(int),
        order=order,
        meta={"k_frac": k_frac, "edge_threshold": edge_threshold},
    )


def _transitive_closure(adj: np.ndarray) -> np.ndarray:
    r = adj.astype(bool) | np.eye(adj.shape[0], dtype=bool)
    for k in range(adj.shape[0]):
        r |= r[:, [k]] & r[[k], :]
    return r.astype(int)


def causev_pipeline(
    table: SeriesTable,
    u: float = 0.9,
    tau_grid=DEFAULT_TAU_GRID,
    n_boot: int = 300,
    seed: int | None = None,
) -> DiscoveryResult:
    """Score every pair, keep CI-supported edges, close under paths.

    Pairs are visited in column order (i, j), i < j, and each pair gets
    its own seed stream derived from (seed, i, j), so adding or
    reordering columns changes the streams of the affected pairs only.
    An edge i -> j is kept when the pair's 95% interval sits strictly
    above one half; the reported reachability is the transitive closure
    of the kept edges. Errors are re-raised with the failing pair named.
    """
    if seed is None:
        raise ValueError("seed is required; the bootstrap is stochastic")
    d = table.d
    names = tuple(table.names)
    scores = np.full((d, d), np.nan)
    adj = np.zeros((d, d), dtype=int)
    cells: dict[str, dict] = {}
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            pair_seed = int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])
            try:
                dec = causev_direction(
                    table, i - 1, j - 1, u, tau_grid, n_boot, pair_seed
                )
            except (TailCausalError, ValueError) as err:
                raise FitError(
                    f"pair {names[i - 1]} / {names[j - 1]}: {err}"
                ) from err
            scores[i - 1, j - 1] = dec.score
            scores[j - 1, i - 1] = 1.0 - dec.score
            cells[f"{names[i - 1]}->{names[j - 1]}"] = {
                "score": dec.score,
                "ci": [dec.ci_low, dec.ci_high],
                "decision": dec.direction,
                "n_boot_effective": dec.n_boot_effective,
            }
            if dec.direction == "x->y":
                adj[i - 1, j - 1] = 1
            elif dec.direction == "y->x":
                adj[j - 1, i - 1] = 1
    return DiscoveryResult(
        method="causev",
        names=names,
        scores=scores,
        score_kind="causev",
        reach=_transitive_closure(adj),
        cells=cells,
        meta={
            "u": u,
            "tau_grid": [float(t) for t in tau_grid],
            "n_boot": n_boot,
            "seed": seed,
            "resampling": dec.resampling if d > 1 else None,
        },
    )


def rmlm_pipeline(
    table: SeriesTable,
    k_frac: float = 0.01,
    edge_threshold: float = 0.05,
    order: tuple[int, ...] | None = None,
) -> DiscoveryResult:
    """Estimate scalings, rebuild the coefficient matrix, threshold it.

    The reconstruction needs the vertices well ordered; when no order
    is given the extremal ancestry order is computed from the same
    table first.
    """
    sigma = spectral_scalings(table, k_frac)
    if order is None:
        order = ease_order(gamma_matrix(table))
    bbar = reconstruct_ml_from_scalings(sigma, order)
    reach = rmlm_reachability(bbar, edge_threshold)
    return DiscoveryResult(
        method="rmlm",
        names=tuple(table.names),
        scores=bbar.entries,
        score_kind="ml_Bbar",
        reach=reach.entries.astype(int),
        order=tuple(order),
        meta={
            "k_frac": k_frac,
            "edge_threshold": edge_threshold,
            "k_exceed": sigma.k_exceed,
            "clipped": float(bbar.meta.get("clipped", 0.0)),
        },
    )


def tree_pipeline(
    table: SeriesTable,
    alpha_level: float = 0.9,
    r: float = 0.75,
    root: int | None = None,
) -> DiscoveryResult:
    """Fit the spanning-tree variant and report its reachability."""
    w = tree_scores(table, alpha_level, r)
    dag = min_arborescence(w, root)
    return DiscoveryResult(
        method="tree",
        names=tuple(table.names),
        scores=w.w,
        score_kind="tree",
        reach=reachability(dag),
        order=tuple(topological_order(dag)),
        meta={
            "alpha_level": alpha_level,
            "r": r,
            "root": root,
            "edges": sorted(dag.edges),
        },
    )


def fit_tails(
    table: SeriesTable,
    threshold_q: float = 0.95,
    decluster_gap: int | None = None,
) -> dict[str, TailFit]:
    """Fit a tail model to each column above its own empirical quantile.

    With a decluster gap, exceedance clusters separated by that many
    sub-threshold observations are reduced to their maxima before
    fitting, which is the usual correction for serial dependence.
    Failures are re-raised with the column named.
    """
    fits: dict[str, TailFit] = {}
    for idx, name in enumerate(table.names):
        observed = table.column_observed(idx)
        try:
            q = empirical_quantile(observed, threshold_q)
            if decluster_gap is None:
                excesses = observed[observed > q] - q
            else:
                clusters = decluster_runs(table.column(idx), q, decluster_gap)
                excesses = np.array([m for _, m in clusters]) - q
            fits[name] = fit_gpd(excesses, threshold=q)
        except (TailCausalError, ValueError) as err:
            raise FitError(f"column {name}: {err}") from err
    return fits


def make_structure_pipeline(
    method: str, **params
) -> Callable[[SeriesTable], np.ndarray]:
    """Bind a discovery method and its tuning into table -> reachability.

    The returned callable is what the bootstrap distance interval
    re-runs on resampled tables. For the pairwise method, pass a small
    n_boot: the inner interval is recomputed on every outer replicate.
    """
    runners = {
        "ease": ease_pipeline,
        "causev": causev_pipeline,
        "rmlm": rmlm_pipeline,
        "tree": tree_pipeline,
    }
    if method not in runners:
        raise ValueError(
            f"unknown discovery method {method!r}; expected one of "
            + ", ".join(sorted(runners))
        )
    runner = runners[method]

    def pipeline(table: SeriesTable) -> np.ndarray:
        return runner(table, **params).reach

    return pipeline
