"""Joint clustering of multi-view data through the transposed Khatri-Rao product."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .clustering import KMeansResult, cut_dendrogram, hierarchical_complete, kmeans, pairwise_distances
from .errors import InputError, KraftyError, LowConfidenceWarning, NumericError, RankWarning
from .joint import (
    AssignmentView,
    EmbeddingView,
    JointResult,
    ProjectionMatrix,
    joint_matrix_krafty,
    joint_matrix_mase,
    krafty,
    mase,
    project_assignment,
)
from .linalg import (
    derive_selector,
    embedding_from_assignment,
    numerical_rank,
    procrustes_align,
    regularize,
    singular_values,
    svd_k,
    tkr,
    tkr_multi,
)
from .metrics import abs_error_k, adjusted_rand_index, contingency, misclustering_count
from .selectk import ElbowEstimate, HeightElbow, largest_gap, merge_height_elbow, profile_likelihood_elbow
from .types import Assignment, Dendrogram, Embedding, SelectorMatrix, Spectrum, SvdResult

__all__ = [
    "BACKEND",
    "Assignment",
    "AssignmentView",
    "Dendrogram",
    "ElbowEstimate",
    "Embedding",
    "EmbeddingView",
    "HeightElbow",
    "InputError",
    "JointResult",
    "KMeansResult",
    "KraftyError",
    "LowConfidenceWarning",
    "NumericError",
    "ProjectionMatrix",
    "RankWarning",
    "SelectorMatrix",
    "Spectrum",
    "SvdResult",
    "abs_error_k",
    "adjusted_rand_index",
    "contingency",
    "cut_dendrogram",
    "derive_selector",
    "embedding_from_assignment",
    "hierarchical_complete",
    "joint_matrix_krafty",
    "joint_matrix_mase",
    "kmeans",
    "krafty",
    "largest_gap",
    "mase",
    "merge_height_elbow",
    "misclustering_count",
    "numerical_rank",
    "pairwise_distances",
    "procrustes_align",
    "profile_likelihood_elbow",
    "project_assignment",
    "regularize",
    "singular_values",
    "svd_k",
    "tkr",
    "tkr_multi",
]
