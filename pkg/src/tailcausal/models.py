"""Structural causal models on DAGs for heavy-tailed data.

Two model families share the weighted-graph machinery here:

* linear structural models, where each variable is a weighted sum of its
  parents plus noise, and the induced noise representation collects
  path-weight *sums*;
* recursive max-linear models, where each variable is a weighted maximum
  of its parents and its own innovation, and the noise representation
  collects path-weight *maxima* (a tropical closure).

On top of the closures sit the identifiability tools (minimal defining
graph, validity of alternative edge sets), the standardized coefficient
scale, the pairwise extremal-dependence matrix, and exact row samplers
for both families plus a multiplicative-noise variant of the max-linear
sampler.

Path products are always composed left to right, source toward sink,
and the dynamic programs below accumulate them in that same order; the
closure values therefore match brute-force path enumeration float for
float, not merely to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .graphs import Dag, Path, ancestors, reachability, topological_order
from .tailstats import SeriesTable

_KINDS = ("linear", "maxlinear")
_MATRIX_KINDS = (
    "linear_noise",
    "ml_coefficients",
    "ml_standardized",
    "scalings",
    "reachability",
    "score",
)


@dataclass(frozen=True)
class WeightedDag:
    """DAG plus one weight per edge.

    kind "linear" allows any nonzero finite weights; kind "maxlinear"
    requires strictly positive ones.
    """

    dag: Dag
    weights: dict
    kind: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        weights = {(int(i), int(j)): float(w) for (i, j), w in self.weights.items()}
        object.__setattr__(self, "weights", weights)
        if set(weights) != self.dag.edges:
            raise ValueError("weights must cover exactly the edge set")
        for (i, j), w in weights.items():
            if not np.isfinite(w) or w == 0.0:
                raise ValueError(f"weight on edge ({i}, {j}) must be finite nonzero")
            if self.kind == "maxlinear" and w <= 0.0:
                raise ValueError(
                    f"max-linear weight on edge ({i}, {j}) must be positive"
                )

    @property
    def d(self) -> int:
        return self.dag.d

    def weight(self, i: int, j: int) -> float:
        return self.weights[(i, j)]

    def to_matrix(self) -> np.ndarray:
        """Dense (d, d) edge-weight matrix, zero off the edge set."""
        w = np.zeros((self.d, self.d))
        for (i, j), c in self.weights.items():
            w[i - 1, j - 1] = c
        return w


@dataclass(frozen=True)
class CoefMatrix:
    """A (d, d) coefficient matrix tagged with what it holds."""

    entries: np.ndarray
    kind: str
    names: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be a square matrix")
        object.__setattr__(self, "entries", entries)
        if self.kind not in _MATRIX_KINDS:
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        if self.names is not None:
            names = tuple(str(c) for c in self.names)
            if len(names) != entries.shape[0]:
                raise ValueError("names must match the matrix dimension")
            object.__setattr__(self, "names", names)

    @property
    def d(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class NoiseSpec:
    """Innovation distribution for the samplers.

    family:
        "pareto"      survival x^(-alpha) on [1, inf)
        "frechet"     exp(-x^(-alpha)) on (0, inf)
        "student_t"   two-sided, alpha degrees of freedom
        "point_mass"  degenerate, per-column constants `values`
    """

    family: str
    alpha: float | None = None
    values: tuple | None = None

    def __post_init__(self):
        if self.family not in ("pareto", "frechet", "student_t", "point_mass"):
            raise ValueError(f"unknown noise family {self.family!r}")
        if self.family == "point_mass":
            if self.values is None:
                raise ValueError("point_mass noise needs values")
            vals = tuple(float(v) for v in self.values)
            object.__setattr__(self, "values", vals)
        else:
            if self.alpha is None or not self.alpha > 0.0:
                raise ValueError(f"{self.family} noise needs alpha > 0")

    @property
    def nonnegative(self) -> bool:
        if self.family == "point_mass":
            return all(v >= 0.0 for v in self.values)
        return self.family in ("pareto", "frechet")

    def min_support(self) -> float:
        if self.family == "pareto":
            return 1.0
        if self.family == "frechet":
            return 0.0
        if self.family == "point_mass":
            return min(self.values)
        return -np.inf

    def sample(self, rng: np.random.Generator, n: int, d: int) -> np.ndarray:
        if self.family == "point_mass":
            if len(self.values) != d:
                raise ValueError(
                    f"point_mass values have length {len(self.values)}, need {d}"
                )
            return np.tile(np.asarray(self.values), (n, 1))
        if self.family == "pareto":
            return (1.0 - rng.random((n, d))) ** (-1.0 / self.alpha)
        if self.family == "frechet":
            return (-np.log(rng.random((n, d)))) ** (-1.0 / self.alpha)
        return rng.standard_t(self.alpha, size=(n, d))


# ---------------------------------------------------------------------------
# path weights and closures


def path_weight(wd: WeightedDag, path: Path) -> float:
    """Product of edge weights along the path, multiplied left to right."""
    for e in path.edge_list():
        if e not in wd.weights:
            raise ValueError(f"path uses missing edge {e}")
    return reduce(lambda acc, e: acc * wd.weights[e], path.edge_list(), 1.0)


def linear_noise_coefficients(wd: WeightedDag) -> CoefMatrix:
    """Noise-representation coefficients of the linear model.

    Entry (i, j) is the sum of path weights over all directed paths
    i -> j, with unit diagonal: X_j = sum_i entry[i, j] * eps_i.
    """
    if wd.kind != "linear":
        raise ValueError("linear_noise_coefficients needs a linear WeightedDag")
    d = wd.d
    b = np.zeros((d, d))
    for j in topological_order(wd.dag):
        for k in wd.dag.parents(j):
            b[:, j - 1] += b[:, k - 1] * wd.weight(k, j)
        b[j - 1, j - 1] += 1.0
    return CoefMatrix(b, "linear_noise")


def ml_coefficient_matrix(wd: WeightedDag) -> CoefMatrix:
    """Max-linear coefficients: tropical closure of the edge weights.

    Entry (i, j) is the maximum path-weight product over directed paths
    i -> j (unit diagonal, zero on unreachable pairs):
    X_j = max_i entry[i, j] * eps_i.
    """
    if wd.kind != "maxlinear":
        raise ValueError("ml_coefficient_matrix needs a maxlinear WeightedDag")
    d = wd.d
    b = np.zeros((d, d))
    for j in topological_order(wd.dag):
        for k in wd.dag.parents(j):
            np.maximum(b[:, j - 1], b[:, k - 1] * wd.weight(k, j), out=b[:, j - 1])
        b[j - 1, j - 1] = 1.0
    return CoefMatrix(b, "ml_coefficients")


def standardize_ml(coef: CoefMatrix, alpha: float) -> CoefMatrix:
    """Rescale each column to unit alpha-norm.

    Standardizing makes every margin of the induced max-linear vector a
    standard Frechet(alpha) law, which is the scale the extremal
    dependence summaries below assume.
    """
    if coef.kind not in ("ml_coefficients", "ml_standardized"):
        raise ValueError("expected max-linear coefficients")
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    b = coef.entries
    norms = np.sum(b**alpha, axis=0) ** (1.0 / alpha)
    if np.any(norms <= 0.0):
        raise ValueError("every column needs a positive alpha-norm")
    return CoefMatrix(b / norms, "ml_standardized", names=coef.names)


def chi_matrix(coef: CoefMatrix, alpha: float) -> CoefMatrix:
    """Pairwise tail-dependence matrix of the max-linear vector.

    chi(i, j) = sum_k min(bbar_ki, bbar_kj)^alpha on the standardized
    scale: the probability mass of shared ancestral shocks.  Symmetric,
    entries in [0, 1], unit diagonal; independent variables get 0.
    """
    bbar = standardize_ml(coef, alpha)
    p = bbar.entries**alpha  # columns sum to 1
    chi = np.minimum(p[:, :, None], p[:, None, :]).sum(axis=0)
    return CoefMatrix(chi, "score", names=coef.names, meta={"measure": "chi"})


# ---------------------------------------------------------------------------
# identifiability


def minimum_ml_dag(wd: WeightedDag) -> Dag:
    """Smallest DAG defining the same max-linear distribution.

    An edge survives exactly when it is the *unique* maximum-weight path
    between its endpoints; a longer path that matches the direct weight
    makes the edge redundant.  Comparisons are exact float comparisons,
    so engineered ties drop the edge.
    """
    if wd.kind != "maxlinear":
        raise ValueError("minimum_ml_dag needs a maxlinear WeightedDag")
    b = ml_coefficient_matrix(wd).entries
    kept = set()
    for (i, j), c in wd.weights.items():
        alt = 0.0
        for k in wd.dag.children(i):
            if k != j and b[k - 1, j - 1] > 0.0:
                alt = max(alt, wd.weight(i, k) * b[k - 1, j - 1])
        if c > alt:
            kept.add((i, j))
    return Dag(wd.d, frozenset(kept))


@dataclass(frozen=True)
class ValidityCheck:
    """Outcome of an alternative-representation check with diagnostics."""

    valid: bool
    condition: str | None = None
    detail: str = ""

    def __bool__(self):
        return self.valid


def is_valid_representation(
    candidate: WeightedDag, reference: WeightedDag
) -> ValidityCheck:
    """Does the candidate graph define the same max-linear law as the reference?

    Checks, in order: the minimal defining edges are present; candidate
    reachability matches; weights on minimal edges are untouched; any
    extra edge carries weight in (0, b_ij].  The first violated condition
    is reported.
    """
    for wd in (candidate, reference):
        if wd.kind != "maxlinear":
            raise ValueError("representation checks apply to maxlinear models")
    if candidate.d != reference.d:
        raise ValueError("graphs must share the vertex set")
    b = ml_coefficient_matrix(reference).entries
    gb = minimum_ml_dag(reference)

    missing = sorted(gb.edges - candidate.dag.edges)
    if missing:
        return ValidityCheck(False, "required_edges", f"missing edge {missing[0]}")

    if not np.array_equal(reachability(candidate.dag), reachability(gb)):
        diff = reachability(candidate.dag) != reachability(gb)
        i, j = np.argwhere(diff)[0]
        return ValidityCheck(
            False, "reachability", f"pair ({i + 1}, {j + 1}) disagrees"
        )

    for i, j in sorted(gb.edges):
        if candidate.weight(i, j) != reference.weight(i, j):
            return ValidityCheck(
                False,
                "pinned_weights",
                f"edge ({i}, {j}) must keep weight {reference.weight(i, j)!r}",
            )

    for i, j in sorted(candidate.dag.edges - gb.edges):
        w = candidate.weight(i, j)
        if not (0.0 < w <= b[i - 1, j - 1]):
            return ValidityCheck(
                False,
                "free_weight_range",
                f"edge ({i}, {j}) weight {w!r} outside (0, {b[i - 1, j - 1]!r}]",
            )
    return ValidityCheck(True)


# ---------------------------------------------------------------------------
# samplers


def _eps_rng(seed) -> np.random.Generator:
    return np.random.default_rng([int(seed), 0])


def _z_rng(seed) -> np.random.Generator:
    return np.random.default_rng([int(seed), 1])


def _column_names(d):
    return [f"X{j}" for j in range(1, d + 1)]


def sample_lscm(
    wd: WeightedDag, noise: NoiseSpec, n: int, seed, return_noise: bool = False
):
    """Draw n rows of the linear model X_j = sum_parents beta * X_k + eps_j.

    Deterministic per seed.  With ``return_noise`` the innovation matrix
    used for the rows is returned alongside the table.
    """
    if wd.kind != "linear":
        raise ValueError("sample_lscm needs a linear WeightedDag")
    if n < 1:
        raise ValueError("n must be positive")
    eps = noise.sample(_eps_rng(seed), n, wd.d)
    x = np.empty((n, wd.d))
    for j in topological_order(wd.dag):
        acc = eps[:, j - 1].copy()
        for k in wd.dag.parents(j):
            acc += wd.weight(k, j) * x[:, k - 1]
        x[:, j - 1] = acc
    table = SeriesTable(x, _column_names(wd.d))
    return (table, eps) if return_noise else table


def sample_rmlm(
    wd: WeightedDag, noise: NoiseSpec, n: int, seed, return_noise: bool = False
):
    """Draw n rows of the recursive max-linear model.

    X_j = max(max_parents c_kj * X_k, eps_j), evaluated in topological
    order with parents visited in ascending label order.  Innovations
    must be nonnegative.
    """
    if wd.kind != "maxlinear":
        raise ValueError("sample_rmlm needs a maxlinear WeightedDag")
    if not noise.nonnegative:
        raise ValueError("max-linear innovations must be nonnegative")
    if n < 1:
        raise ValueError("n must be positive")
    eps = noise.sample(_eps_rng(seed), n, wd.d)
    x = _rmlm_rows(wd, eps)
    table = SeriesTable(x, _column_names(wd.d))
    return (table, eps) if return_noise else table


def sample_rmlm_noisy(
    wd: WeightedDag,
    noise: NoiseSpec,
    noise_z: NoiseSpec,
    n: int,
    seed,
    return_noise: bool = False,
):
    """Max-linear rows with multiplicative observation noise.

    U_j = (max(max_parents c_kj * U_k, eps_j)) * Z_j with Z >= 1 drawn
    independently per cell; noise propagates to descendants through the
    recursion.  Z must have support in [1, inf), so a degenerate Z == 1
    reproduces ``sample_rmlm`` bit for bit at the same seed (the
    innovation stream is shared).
    """
    if wd.kind != "maxlinear":
        raise ValueError("sample_rmlm_noisy needs a maxlinear WeightedDag")
    if not noise.nonnegative:
        raise ValueError("max-linear innovations must be nonnegative")
    if noise_z.family not in ("pareto", "point_mass") or noise_z.min_support() < 1.0:
        raise ValueError("Z must have support in [1, inf)")
    if n < 1:
        raise ValueError("n must be positive")
    eps = noise.sample(_eps_rng(seed), n, wd.d)
    z = noise_z.sample(_z_rng(seed), n, wd.d)
    u = _rmlm_rows(wd, eps, z)
    table = SeriesTable(u, _column_names(wd.d))
    return (table, eps, z) if return_noise else table


def _rmlm_rows(wd: WeightedDag, eps: np.ndarray, z: np.ndarray | None = None):
    x = np.empty_like(eps)
    for j in topological_order(wd.dag):
        acc = eps[:, j - 1].copy()
        for k in wd.dag.parents(j):
            np.maximum(acc, wd.weight(k, j) * x[:, k - 1], out=acc)
        if z is not None:
            acc *= z[:, j - 1]
        x[:, j - 1] = acc
    return x
