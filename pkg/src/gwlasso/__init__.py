"""Geographically weighted lasso regression for station networks.

Local regression with distance-decay kernels where the distance metric can
be straight-line (great-circle) or shortest-path along a transit network,
each local fit is a lasso solved by least angle regression, and the kernel
bandwidth is chosen by leave-one-out cross-validation.
"""

from .clustering import ClusterResult, choose_k, kmeans, scale_profiles
from .diagnostics import (
    ConditionReport,
    MoranResult,
    compare_models,
    inverse_distance_weights,
    knn_weights,
    local_condition_numbers,
    morans_i,
)
from .gwl import (
    AdaGwlModel,
    LocalLarsResult,
    bandwidth_selector,
    fit_ada_gwl,
    load_model,
    local_lars,
    predict,
    save_model,
)
from .gwr import FitMetrics, GwrFit, OlsFit, gwr_bandwidth_cv, gwr_fit, ols_fit
from .kernels import KernelSpec, WeightVector, bisquare_weight, gaussian_weight, weight_vector
from .lars import (
    LarsPath,
    PathKnot,
    PathSolution,
    Standardization,
    knot_solution,
    lars_path,
    lasso_max_penalty,
    lasso_oracle,
    solution_at,
)
from .network import (
    EARTH_RADIUS_KM,
    DistanceMatrix,
    GeoPoint,
    TransitGraph,
    betweenness_centrality,
    degree_centrality,
    distance_to_center,
    euclidean_distance_matrix,
    great_circle_distance,
    network_distance_matrix,
)

__version__ = "0.1.0"
