"""Structure learning for recursive max-linear models.

Two routes to a graph estimate live here. The spectral route
rank-standardizes the margins, reads the angular distribution of the
radial exceedances, and summarizes it by the matrix of second cross
moments (the scalings). Under the standardized model that matrix is the
Gram matrix of the coefficient columns, so a triangular factorization
in a causal order recovers the coefficients themselves. The tree route
scores every ordered pair by how tightly the log-difference of the pair
concentrates when the conditioning variable is extreme, then extracts
a minimum spanning arborescence from the scores.

Conventions: coefficient matrices store ancestors in rows, so entry
(i, j) is the influence of i's innovation on variable j and the
scalings satisfy sigma = Bbar^T Bbar. In a well-ordered labeling Bbar
is upper triangular and the factorization peels it from the first
vertex forward, one row at a time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import NumericError, SampleSizeError
from .graphs import Dag
from .models import CoefMatrix
from .tailstats import SeriesTable, empirical_quantile


@dataclass(frozen=True)
class SpectralEstimate:
    """Scalings matrix plus how it was obtained."""

    sigma: CoefMatrix
    k_exceed: int
    norm: str = "L2"

    def __post_init__(self):
        if self.sigma.kind != "scalings":
            raise ValueError("sigma must be a CoefMatrix of kind 'scalings'")
        if self.norm != "L2":
            raise ValueError("only the L2 simplex norm is supported")
        s = self.sigma.entries
        if not np.allclose(s, s.T, atol=1e-8):
            raise ValueError("scalings must be symmetric")
        if np.linalg.eigvalsh((s + s.T) / 2.0).min() < -1e-8:
            raise ValueError("scalings must be positive semidefinite")
        diag = np.diag(s)
        if (diag <= 0).any() or (diag > 1 + 1e-8).any():
            raise ValueError("diagonal scalings must lie in (0, 1]")

    @property
    def d(self) -> int:
        return self.sigma.d


@dataclass(frozen=True)
class TreeScoreMatrix:
    """Pairwise concentration scores, diagonal left undefined.

    w[i-1, j-1] is small when conditioning on large x_j pins down the
    log-difference x_i - x_j, which is the signature of j driving i.
    """

    w: np.ndarray
    r: float
    alpha_level: float
    n_used: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).copy()
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("w must be a square matrix")
        np.fill_diagonal(w, np.nan)
        off = ~np.eye(w.shape[0], dtype=bool)
        if not np.isfinite(w[off]).all() or (w[off] < 0).any():
            raise ValueError("off-diagonal scores must be finite and nonnegative")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)
        for name in ("r", "alpha_level"):
            v = float(getattr(self, name))
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
            object.__setattr__(self, name, v)
        if self.n_used is not None:
            n_used = np.asarray(self.n_used, dtype=int)
            if n_used.shape != w.shape:
                raise ValueError("n_used must match the score shape")
            if (n_used[off] < 20).any():
                raise ValueError("need at least 20 exceedances per pair")
            object.__setattr__(self, "n_used", n_used)

    @property
    def d(self) -> int:
        return self.w.shape[0]


def _frechet2_ranks(values: np.ndarray) -> np.ndarray:
    """Columnwise rank transform onto the unit-Frechet(2) scale."""
    n = values.shape[0]
    out = np.empty_like(values)
    for j in range(values.shape[1]):
        u = rankdata(values[:, j]) / (n + 1.0)
        out[:, j] = (-np.log(u)) ** -0.5
    return out


def spectral_scalings(table: SeriesTable, k_frac: float = 0.01) -> SpectralEstimate:
    """Estimate the scalings from the angular parts of large rows.

    Complete rows are rank-standardized to the Frechet(2) scale, the
    rows with the largest L2 radius are projected to the unit sphere,
    and the scalings are the cross moments of those directions, scaled
    so each margin's self-scaling matches its standardized value of
    one. The rank step makes the estimate invariant under increasing
    transforms of the input columns.
    """
    if not 0.0 < k_frac < 1.0:
        raise ValueError("k_frac must lie in (0, 1)")
    rows = table.complete_rows()
    n = rows.shape[0]
    if n < 500:
        raise SampleSizeError(f"need 500 complete rows, have {n}")
    x = _frechet2_ranks(rows)
    radii = np.sqrt((x**2).sum(axis=1))
    threshold = empirical_quantile(radii, 1.0 - k_frac)
    keep = radii > threshold
    k_exceed = int(keep.sum())
    if k_exceed < 10:
        raise SampleSizeError(f"only {k_exceed} radial exceedances")
    omega = x[keep] / radii[keep, None]
    raw = omega.T @ omega / k_exceed
    scale = np.sqrt(np.diag(raw))
    sigma = raw / np.outer(scale, scale)
    sigma = (sigma + sigma.T) / 2.0
    np.fill_diagonal(sigma, 1.0)  # the standardized self-scaling, exactly
    cm = CoefMatrix(
        sigma, "scalings", names=table.names, meta={"k_frac": float(k_frac)}
    )
    return SpectralEstimate(cm, k_exceed)


def scalings_from_ml(bbar: CoefMatrix) -> SpectralEstimate:
    """Exact scalings of a standardized coefficient matrix."""
    if bbar.kind != "ml_standardized":
        raise ValueError("expected a CoefMatrix of kind 'ml_standardized'")
    sigma = bbar.entries.T @ bbar.entries
    sigma = (sigma + sigma.T) / 2.0
    return SpectralEstimate(
        CoefMatrix(sigma, "scalings", names=bbar.names), k_exceed=0
    )


def reconstruct_ml_from_scalings(
    sigma: SpectralEstimate, order=None
) -> CoefMatrix:
    """Recover the standardized coefficients from their Gram matrix.

    In a causal order the coefficient matrix is triangular, so the
    identity sigma = Bbar^T Bbar peels uniquely: the first vertex in
    the order owns the whole first diagonal entry, and each later row
    follows from the cross moments with the rows already known. The
    model says every coefficient is nonnegative, so negative partial
    quotients (estimation noise) are clipped to zero and the clipped
    mass is reported in the result's meta; the diagonal then absorbs
    the remainder, keeping each column norm pinned to the input.

    order lists vertices source-first; by default the labels are taken
    to already be well ordered.
    """
    d = sigma.d
    if order is None:
        order = tuple(range(1, d + 1))
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(1, d + 1)):
        raise ValueError("order must be a permutation of 1..d")
    perm = [v - 1 for v in order]
    s = sigma.sigma.entries[np.ix_(perm, perm)]
    u = np.zeros((d, d))
    clipped = 0
    clipped_mass = 0.0
    for i in range(d):
        head = s[i, i] - (u[:i, i] ** 2).sum()
        if head < 1e-12:
            clipped += 1
            clipped_mass += float(max(-head, 0.0))
            head = 1e-12
        u[i, i] = np.sqrt(head)
        for j in range(i + 1, d):
            val = (s[i, j] - u[:i, i] @ u[:i, j]) / u[i, i]
            if val < 0.0:
                clipped += 1
                clipped_mass += -float(val)
                val = 0.0
            u[i, j] = val
    bbar = np.zeros((d, d))
    bbar[np.ix_(perm, perm)] = u
    names = sigma.sigma.names
    return CoefMatrix(
        bbar,
        "ml_standardized",
        names=names,
        meta={
            "order": order,
            "clipped": clipped,
            "clipped_mass": clipped_mass,
        },
    )


def rmlm_reachability(bbar: CoefMatrix, edge_threshold: float = 0.05) -> CoefMatrix:
    """Threshold the standardized coefficients into reachability."""
    if bbar.kind != "ml_standardized":
        raise ValueError("expected a CoefMatrix of kind 'ml_standardized'")
    r = np.eye(bbar.d, dtype=int)
    off = bbar.entries > edge_threshold
    np.fill_diagonal(off, False)
    r[off] = 1
    return CoefMatrix(
        r.astype(float), "reachability", names=bbar.names, meta={"method": "rmlm"}
    )


def tree_scores(
    table: SeriesTable, alpha_level: float = 0.9, r: float = 0.75
) -> TreeScoreMatrix:
    """Score every ordered pair by conditional log-difference spread.

    For the pair (i, j) take the jointly observed rows where x_j sits
    above its alpha_level quantile, form the log-differences
    x_i - x_j there, and square the gap between their mean and their
    r-quantile, divided by the number of rows used. When j drives i the
    conditional differences collapse onto the log edge weight, so the
    score vanishes; reversed pairs keep their innovation spread.
    """
    d = table.d
    w = np.full((d, d), np.nan)
    n_used = np.zeros((d, d), dtype=int)
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            a, b = table.pair_complete(i, j)
            if (a <= 0).any() or (b <= 0).any():
                raise NumericError(
                    "scores work on the log scale; data must be positive"
                )
            xi, xj = np.log(a), np.log(b)
            thr = empirical_quantile(xj, alpha_level)
            diff = xi[xj > thr] - xj[xj > thr]
            if diff.size < 20:
                raise SampleSizeError(
                    f"pair ({i + 1}, {j + 1}) keeps {diff.size} rows "
                    "above the conditioning level, need 20"
                )
            gap = diff.mean() - empirical_quantile(diff, r)
            w[i, j] = gap**2 / diff.size
            n_used[i, j] = diff.size
    np.fill_diagonal(n_used, 20)  # placeholder; diagonal is undefined
    return TreeScoreMatrix(w, r, alpha_level, n_used)


def _best_entering(nodes, cost, v):
    """Cheapest edge entering v, deterministic under ties."""
    best = None
    for u in nodes:
        if u == v or (u, v) not in cost:
            continue
        c = cost[(u, v)]
        if best is None or c[0] < best[0]:
            best = c + (u,)
    return best


def _edmonds(nodes, cost, root):
    """Minimum out-arborescence from root; returns original edges.

    cost maps (u, v) on the current (possibly contracted) vertex set to
    (weight, original_u, original_v). Contraction follows the classic
    scheme: pick each vertex's cheapest entering edge, and if the picks
    close a cycle, collapse it, discount entering edges by the cycle
    edge they displace, and recurse.
    """
    picked = {}
    for v in nodes:
        if v == root:
            continue
        picked[v] = _best_entering(nodes, cost, v)
    # hunt for a cycle among the picked tails
    cycle = None
    for start in nodes:
        seen = []
        v = start
        while v != root and v not in seen:
            seen.append(v)
            v = picked[v][3]
        if v != root and cycle is None:
            i = seen.index(v)
            cycle = seen[i:]
            break
    if cycle is None:
        return {(p[1], p[2]) for p in picked.values()}
    in_cycle = set(cycle)
    super_node = max(nodes) + 1
    reduced = {}
    displaced = {}

    def keep_min(key, value, cycle_vertex=None):
        if key not in reduced or value[0] < reduced[key][0]:
            reduced[key] = value
            if cycle_vertex is not None:
                displaced[key] = cycle_vertex

    for (u, v), (wgt, ou, ov) in cost.items():
        if u in in_cycle and v not in in_cycle:
            keep_min((super_node, v), (wgt, ou, ov))
        elif u not in in_cycle and v in in_cycle:
            keep_min((u, super_node), (wgt - picked[v][0], ou, ov), v)
        elif u not in in_cycle and v not in in_cycle:
            reduced[(u, v)] = (wgt, ou, ov)
    entry_of = {
        val[1:3]: displaced[key]
        for key, val in reduced.items()
        if key[1] == super_node
    }
    new_nodes = [n for n in nodes if n not in in_cycle] + [super_node]
    sub = _edmonds(new_nodes, reduced, root)
    edges = set(sub)
    broken = None
    for e in sub:
        if e in entry_of:
            broken = entry_of[e]
            break
    for v in cycle:
        if v != broken:
            p = picked[v]
            edges.add((p[1], p[2]))
    return edges


def min_arborescence(scores: TreeScoreMatrix, root=None) -> Dag:
    """Minimum spanning tree with every edge oriented toward root.

    The cost of orienting u -> v is the score of the hypothesis that u
    drives v, which the score matrix stores at (v, u). With no root
    given, every choice is tried and the cheapest tree wins, ties going
    to the smallest root label.
    """
    d = scores.d
    if d < 2:
        raise ValueError("need at least two vertices")
    if root is None:
        best = None
        for r in range(1, d + 1):
            dag = min_arborescence(scores, r)
            total = sum(scores.w[j - 1, i - 1] for i, j in dag.edges)
            if best is None or total < best[0] - 1e-15:
                best = (total, dag)
        return best[1]
    root = int(root)
    if not 1 <= root <= d:
        raise ValueError(f"root {root} out of range")
    # toward-root trees become from-root trees on the reversed graph
    cost = {}
    for u in range(1, d + 1):
        for v in range(1, d + 1):
            if u != v:
                cost[(u, v)] = (float(scores.w[u - 1, v - 1]), u, v)
    reversed_edges = _edmonds(list(range(1, d + 1)), cost, root)
    return Dag(d, frozenset((v, u) for u, v in reversed_edges))


def brute_force_arborescence(scores: TreeScoreMatrix, root: int):
    """Exhaustive minimum toward-root tree, for cross-checking.

    Enumerates every map from the non-root vertices to a successor and
    keeps the cheapest one whose successor chains all reach the root.
    Only sensible for a handful of vertices.
    """
    d = scores.d
    others = [v for v in range(1, d + 1) if v != root]
    best = None
    for succ in itertools.product(*[[u for u in range(1, d + 1) if u != v] for v in others]):
        nxt = dict(zip(others, succ))
        ok = True
        for v in others:
            seen = set()
            w = v
            while w != root:
                if w in seen:
                    ok = False
                    break
                seen.add(w)
                w = nxt[w]
            if not ok:
                break
        if not ok:
            continue
        total = sum(scores.w[nxt[v] - 1, v - 1] for v in others)
        if best is None or total < best[0]:
            best = (total, frozenset((v, nxt[v]) for v in others))
    return best
