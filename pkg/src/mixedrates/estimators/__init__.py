"""Finite-sample estimators: bridge-penalized regression, shortest-half
interval, and two-cluster k-means."""

from .lasso import (
    DesignError,
    LassoConfig,
    LassoFit,
    SearchBoxError,
    criterion_value,
    fit_bridge_lasso,
    generate_lasso_design,
    search_box,
)
from .shorth import ShorthFit, ShorthPopulation, fit_shorth, shorth_population
from .kmeans import (
    INIT_CENTERS,
    KmeansCoords,
    KmeansGlobalResult,
    assign_clusters,
    centers_from_coords,
    fit_kmeans2,
    fit_kmeans2_global,
    update_centers,
    within_ss,
)

__all__ = [
    "DesignError",
    "LassoConfig",
    "LassoFit",
    "SearchBoxError",
    "criterion_value",
    "fit_bridge_lasso",
    "generate_lasso_design",
    "search_box",
    "ShorthFit",
    "ShorthPopulation",
    "fit_shorth",
    "shorth_population",
    "INIT_CENTERS",
    "KmeansCoords",
    "KmeansGlobalResult",
    "assign_clusters",
    "centers_from_coords",
    "fit_kmeans2",
    "fit_kmeans2_global",
    "update_centers",
    "within_ss",
]
