"""LDOF Baseline Detectors
Top-n KNN (k-distance) and top-n LOF, the comparison methods of the
precision experiments. LOF follows the standard reach-distance /
local-reachability-density formulation with exactly min_pts
neighbours per record.
"""
import logging
from typing import Optional, Union

import numpy as np

from ..core.dataset import Dataset
from ..core.errors import ParameterError
from ..core.metric import DistanceMetric
from ..core.scores import Method, OutlierScore, Ranking, build_ranking
from .neighbors import Backend, NeighborIndex, NeighborTable, build_index

logger = logging.getLogger("ldof.baselines")


def _check(n: Optional[int], k: int, size: int, name: str = "k") -> None:
    if n is not None and int(n) < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    if int(k) < 1:
        raise ParameterError(f"{name} must be at least 1, got {k}")
    if int(k) > size - 1:
        raise ParameterError(
            f"{name}={k} exceeds the {size - 1} neighbours available; choose a smaller {name}")


def _table(dataset: Dataset, k: int, metric: DistanceMetric, backend,
           index: Optional[NeighborIndex], table: Optional[NeighborTable]) -> NeighborTable:
    if table is not None:
        return table if table.k == k else table.prefix(k)
    if index is None:
        index = build_index(dataset, metric=metric, backend=backend)
    return index.table(k)


def k_distance(dataset: Dataset, record_id: int, k: int,
               metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
               index: Optional[NeighborIndex] = None) -> float:
    _check(None, k, dataset.size)
    if index is None:
        index = build_index(dataset, metric=metric)
    return float(index.k_nearest(record_id, k).distances[-1])


def top_n_knn(dataset: Dataset, n: int, k: int,
              metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
              backend: Union[Backend, str] = Backend.TREE,
              index: Optional[NeighborIndex] = None,
              table: Optional[NeighborTable] = None) -> Ranking:
    _check(n, k, dataset.size)
    table = _table(dataset, k, metric, backend, index, table)
    kdist = table.distances[:, -1]
    scores = [OutlierScore(id=i, score=float(v)) for i, v in enumerate(kdist)]
    return build_ranking(Method.KNN, int(n), int(k), scores)


def lof_scores(table: NeighborTable) -> np.ndarray:
    """LOF of every record, in two passes: k-distance and lrd for all
    records first, then the density ratios."""
    ids, dists = table.ids, table.distances
    kdist = dists[:, -1]
    reach = np.maximum(kdist[ids], dists)
    mean_reach = reach.mean(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lrd = np.where(mean_reach > 0, 1.0 / mean_reach, np.inf)
        ratios = lrd[ids] / lrd[:, np.newaxis]
    # both densities infinite: duplicate cluster, neutral ratio
    ratios[np.isnan(ratios)] = 1.0
    return ratios.mean(axis=1)


def lof_score(dataset: Dataset, record_id: int, min_pts: int,
              metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
              index: Optional[NeighborIndex] = None) -> float:
    _check(None, min_pts, dataset.size, name="min_pts")
    dataset.check_id(record_id)
    if index is None:
        index = build_index(dataset, metric=metric)
    # only the two-hop neighbourhood of the record feeds its LOF
    own = index.k_nearest(record_id, min_pts)
    hop1 = [int(o) for o in own.ids]
    hop2 = sorted({int(q) for o in hop1 for q in index.k_nearest(o, min_pts).ids} | set(hop1))
    sets = {q: index.k_nearest(q, min_pts) for q in set(hop2) | {int(record_id)}}
    kdist = {q: float(s.distances[-1]) for q, s in sets.items()}

    def lrd(q: int) -> float:
        s = sets[q]
        reach = np.maximum(np.array([kdist[int(o)] for o in s.ids]), s.distances)
        mean_reach = float(reach.mean())
        return 1.0 / mean_reach if mean_reach > 0 else np.inf

    own_lrd = lrd(int(record_id))
    ratios = []
    for o in hop1:
        other = lrd(o)
        if np.isinf(other) and np.isinf(own_lrd):
            ratios.append(1.0)
        else:
            ratios.append(other / own_lrd)
    return float(np.mean(ratios))


def top_n_lof(dataset: Dataset, n: int, min_pts: int,
              metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
              backend: Union[Backend, str] = Backend.TREE,
              index: Optional[NeighborIndex] = None,
              table: Optional[NeighborTable] = None) -> Ranking:
    _check(n, min_pts, dataset.size, name="min_pts")
    table = _table(dataset, min_pts, metric, backend, index, table)
    values = lof_scores(table)
    scores = [OutlierScore(id=i, score=float(v)) for i, v in enumerate(values)]
    return build_ranking(Method.LOF, int(n), int(min_pts), scores)
