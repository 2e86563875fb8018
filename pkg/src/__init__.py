"""LDOF Outlier Toolkit - Source Package
"""
from .core import ConfigManager, Dataset, DistanceMetric, Method, Ranking
from .detectors import top_n_knn, top_n_ldof, top_n_lof

__version__ = "1.0.0"
__all__ = [
    "ConfigManager",
    "Dataset",
    "DistanceMetric",
    "Method",
    "Ranking",
    "top_n_knn",
    "top_n_ldof",
    "top_n_lof",
]
