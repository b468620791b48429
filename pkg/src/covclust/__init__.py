"""Joint covariate clustering and multinomial logistic classification.

Columns of the weight matrix are fused through a similarity-weighted
group penalty solved by a specialized ADMM; exactly equal auxiliary
vectors reveal covariate clusters, a descending regularization path
enumerates candidate partitions, and a Laplace approximation of the
marginal likelihood picks the most plausible one.
"""

from .admm import AdmmState, EdgeAggregates, SolverConfig, solve
from .clusters import Clustering, connected_components, extract_clustering, \
    fusion_edges
from .data import Dataset, ModelParams, SimilarityGraph
from .errors import (CovclustError, DimensionError, DomainError, FitError,
                     InputError, NumericError, SolverError)
from .likelihood import class_probs, full_objective, penalized_nll, \
    penalized_nll_grad
from .metrics import EvalReport, accuracy, anmi, cv_select, kmeans_similarity
from .modelselect import (ModelScore, ReducedDataset, diag_hessian,
                          log_marginal, map_fit, project_dataset,
                          rank_clusterings, select_sigma)
from .path import PathRecord, nu_grid, run_path, score_path
from .synth import (GroundTruth, estimate_similarity, make_ground_truth,
                    make_similarity, sample)

__version__ = "0.1.0"

__all__ = [
    "AdmmState", "EdgeAggregates", "SolverConfig", "solve",
    "Clustering", "connected_components", "extract_clustering",
    "fusion_edges",
    "Dataset", "ModelParams", "SimilarityGraph",
    "CovclustError", "DimensionError", "DomainError", "FitError",
    "InputError", "NumericError", "SolverError",
    "class_probs", "full_objective", "penalized_nll", "penalized_nll_grad",
    "EvalReport", "accuracy", "anmi", "cv_select", "kmeans_similarity",
    "ModelScore", "ReducedDataset", "diag_hessian", "log_marginal",
    "map_fit", "project_dataset", "rank_clusterings", "select_sigma",
    "PathRecord", "nu_grid", "run_path", "score_path",
    "GroundTruth", "estimate_similarity", "make_ground_truth",
    "make_similarity", "sample",
    "__version__",
]
