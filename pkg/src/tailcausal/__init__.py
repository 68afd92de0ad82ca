"""Causal discovery and causal effect estimation for heavy-tailed data.

The package splits into structural models and samplers (`models`),
graph primitives (`graphs`), tail statistics (`tailstats`), three
structure-discovery methods (`ease`, `causev`, `rmlm`), an extreme
quantile treatment effect estimator (`qte`), evaluation metrics
(`evaluation`), method orchestration (`pipelines`), and the CSV, DAG
text, and report formats (`io`).  The names below cover the common
entry points; everything else is imported from its module.
"""

from .causev import causev_direction, causev_score
from .ease import ease_order, ease_reachability, gamma_matrix, gamma_population
from .errors import (
    FitError,
    NumericError,
    ParseError,
    SampleSizeError,
    TailCausalError,
)
from .evaluation import bootstrap_structure_ci, reachability_distance
from .graphs import Dag, reachability, topological_order
from .models import (
    NoiseSpec,
    WeightedDag,
    linear_noise_coefficients,
    ml_coefficient_matrix,
    sample_lscm,
    sample_rmlm,
    standardize_ml,
)
from .pipelines import (
    causev_pipeline,
    ease_pipeline,
    fit_tails,
    rmlm_pipeline,
    tree_pipeline,
)
from .qte import TreatmentSample, estimate_propensity, extremal_qte, qte_bootstrap
from .rmlm import min_arborescence, reconstruct_ml_from_scalings, spectral_scalings
from .tailstats import SeriesTable, fit_gpd, hill_estimate

__version__ = "0.1.0"

__all__ = [
    "Dag",
    "FitError",
    "NoiseSpec",
    "NumericError",
    "ParseError",
    "SampleSizeError",
    "SeriesTable",
    "TailCausalError",
    "TreatmentSample",
    "WeightedDag",
    "bootstrap_structure_ci",
    "causev_direction",
    "causev_pipeline",
    "causev_score",
    "ease_order",
    "ease_pipeline",
    "ease_reachability",
    "estimate_propensity",
    "extremal_qte",
    "fit_gpd",
    "fit_tails",
    "gamma_matrix",
    "gamma_population",
    "hill_estimate",
    "linear_noise_coefficients",
    "min_arborescence",
    "ml_coefficient_matrix",
    "qte_bootstrap",
    "reachability",
    "reachability_distance",
    "reconstruct_ml_from_scalings",
    "rmlm_pipeline",
    "sample_lscm",
    "sample_rmlm",
    "spectral_scalings",
    "standardize_ml",
    "topological_order",
    "tree_pipeline",
]
