"""LDOF Neighbour Index
k-nearest-neighbour queries over an immutable dataset, backed either
by brute force (the oracle) or by a kd-tree. Both backends rank by
the same exact distance kernel, ties by ascending id, so their
answers are identical.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from ..core.dataset import Dataset
from ..core.errors import DataError, ParameterError
from ..core.metric import DistanceMetric, distances_to
from ..core.scores import NeighborSet

logger = logging.getLogger("ldof.neighbors")

DEFAULT_LEAFSIZE = 16
DEFAULT_BRUTE_FORCE_DIM = 16


class Backend(Enum):
    BRUTE_FORCE = "brute_force"
    TREE = "tree"

    @classmethod
    def parse(cls, value: Union[str, "Backend"]) -> "Backend":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ParameterError(f"unknown backend {value!r} (expected brute_force or tree)") from None


@dataclass(frozen=True, eq=False)
class NeighborTable:
    """k-NN of every record: row i holds record i's neighbours in rank order."""

    k: int
    ids: np.ndarray
    distances: np.ndarray

    def prefix(self, k: int) -> "NeighborTable":
        """Table for a smaller neighbourhood; exact because k-NN lists are prefix-closed."""
        if k > self.k:
            raise ParameterError(f"table holds {self.k} neighbours, {k} requested")
        return NeighborTable(k=k, ids=self.ids[:, :k], distances=self.distances[:, :k])

    def neighbor_set(self, query_id: int) -> NeighborSet:
        return NeighborSet(
            query_id=int(query_id), k=self.k,
            ids=self.ids[query_id].copy(), distances=self.distances[query_id].copy(),
        )


class NeighborIndex:
    """Read-only k-NN index built once over a dataset."""

    def __init__(self, dataset: Dataset, metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
                 backend: Backend = Backend.TREE, leafsize: int = DEFAULT_LEAFSIZE,
                 brute_force_dim: int = DEFAULT_BRUTE_FORCE_DIM, workers: int = 1):
        self.dataset = dataset
        self.metric = DistanceMetric.parse(metric)
        self.backend = Backend.parse(backend)
        self.workers = max(1, int(workers))
        self._points = dataset.features
        self._tree: Optional[cKDTree] = None
        if self.backend is Backend.TREE:
            if dataset.dimension > brute_force_dim:
                logger.warning(f"{dataset.name}: d={dataset.dimension} > {brute_force_dim}, "
                            f"tree backend answers by brute force")
            else:
                self._tree = cKDTree(self._points, leafsize=leafsize)

    @property
    def size(self) -> int:
        return self.dataset.size

    def _clamp(self, k: int) -> int:
        if int(k) < 1:
            raise ParameterError(f"k must be at least 1, got {k}")
        return min(int(k), self.size - 1)

    def _rank(self, query_id: int, candidates: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
        candidates = candidates[candidates != query_id]
        dists = distances_to(self.metric, self._points[candidates], self._points[query_id])
        order = np.lexsort((candidates, dists))[:m]
        return candidates[order], dists[order]

    def _brute_row(self, query_id: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
        return self._rank(query_id, np.arange(self.size, dtype=np.int64), m)

    def _radius(self, tree_dists: np.ndarray) -> float:
        # widen so every point tied with the m-th neighbour under the exact kernel is a candidate
        r = float(np.max(tree_dists))
        return r + max(r * 1e-9, 1e-12)

    def _tree_candidates(self, query_id: int, m: int) -> np.ndarray:
        tree_dists, _ = self._tree.query(self._points[query_id], k=m + 1)
        found = self._tree.query_ball_point(self._points[query_id], r=self._radius(np.atleast_1d(tree_dists)))
        return np.asarray(found, dtype=np.int64)

    def k_nearest(self, query_id: int, k: int) -> NeighborSet:
        self.dataset.check_id(query_id)
        m = self._clamp(k)
        if self._tree is None:
            ids, dists = self._brute_row(int(query_id), m)
        else:
            ids, dists = self._rank(int(query_id), self._tree_candidates(int(query_id), m), m)
        return NeighborSet(query_id=int(query_id), k=int(k), ids=ids, distances=dists)

    def table(self, k: int) -> NeighborTable:
        """k-NN of every record at once."""
        m = self._clamp(k)
        n = self.size
        ids = np.empty((n, m), dtype=np.int64)
        dists = np.empty((n, m), dtype=np.float64)
        if self._tree is None:
            for q in range(n):
                ids[q], dists[q] = self._brute_row(q, m)
        else:
            tree_dists, _ = self._tree.query(self._points, k=m + 1, workers=self.workers)
            tree_dists = tree_dists.reshape(n, -1)
            radii = tree_dists.max(axis=1)
            radii = radii + np.maximum(radii * 1e-9, 1e-12)
            found = self._tree.query_ball_point(self._points, r=radii, workers=self.workers)
            for q in range(n):
                ids[q], dists[q] = self._rank(q, np.asarray(found[q], dtype=np.int64), m)
        return NeighborTable(k=m, ids=ids, distances=dists)


def build_index(dataset: Dataset, metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
                backend: Union[Backend, str] = Backend.TREE, **kwargs) -> NeighborIndex:
    if dataset.size < 2:
        raise DataError(f"{dataset.name}: at least 2 records are needed for neighbour queries, "
                        f"got {dataset.size}")
    return NeighborIndex(dataset, metric=metric, backend=Backend.parse(backend), **kwargs)


def k_nearest(index: NeighborIndex, query_id: int, k: int) -> NeighborSet:
    return index.k_nearest(query_id, k)
