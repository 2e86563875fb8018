"""LDOF Detectors Package
Neighbour index, the LDOF detector and the KNN/LOF baselines.
"""
from .neighbors import Backend, NeighborIndex, NeighborTable, build_index, k_nearest
from .ldof import knn_distance, knn_inner_distance, ldof_score, ldof_scores, suggest_k, top_n_ldof
from .baselines import k_distance, lof_score, top_n_knn, top_n_lof

__all__ = [
    "Backend",
    "NeighborIndex",
    "NeighborTable",
    "build_index",
    "k_nearest",
    "knn_distance",
    "knn_inner_distance",
    "ldof_score",
    "ldof_scores",
    "suggest_k",
    "top_n_ldof",
    "k_distance",
    "lof_score",
    "top_n_knn",
    "top_n_lof",
]
