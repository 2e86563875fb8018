"""LDOF Distance Metrics
Euclidean and squared Euclidean distance. Every distance in the
toolkit goes through `distances_to` or `pairwise_distances`, so
different code paths produce bit-identical values.
"""
from enum import Enum
from typing import Sequence, Union

import numpy as np
from scipy.spatial.distance import pdist

from .errors import MalformedInputError, ParameterError

ArrayLike = Union[Sequence[float], np.ndarray]


class DistanceMetric(Enum):
    EUCLIDEAN = "euclidean"
    SQUARED_EUCLIDEAN = "squared_euclidean"

    @classmethod
    def parse(cls, value: Union[str, "DistanceMetric"]) -> "DistanceMetric":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ParameterError(f"unknown metric {value!r} (expected one of {choices})") from None


_PDIST_NAMES = {
    DistanceMetric.EUCLIDEAN: "euclidean",
    DistanceMetric.SQUARED_EUCLIDEAN: "sqeuclidean",
}


def distances_to(metric: DistanceMetric, points: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Distance from `query` to every row of `points`."""
    diff = points - query
    squared = np.square(diff).sum(axis=1)
    if metric is DistanceMetric.SQUARED_EUCLIDEAN:
        return squared
    return np.sqrt(squared)


def pairwise_distances(metric: DistanceMetric, points: np.ndarray) -> np.ndarray:
    """Condensed distances over the unordered pairs of rows."""
    return pdist(points, _PDIST_NAMES[metric])


def distance(metric: DistanceMetric, x: ArrayLike, y: ArrayLike) -> float:
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise MalformedInputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise MalformedInputError("feature vectors must be finite")
    return float(distances_to(DistanceMetric.parse(metric), a[np.newaxis, :], b)[0])
