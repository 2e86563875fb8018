"""LDOF Detector
Local distance-based outlier factor: the mean distance from a record
to its k nearest neighbours (d̄) over the mean distance among those
neighbours (D̄), and the top-n ranking with lower-bound pruning.
"""
import logging
import math
from typing import List, Optional, Union

from ..analysis.theory import ldof_lower_bound
from ..core.dataset import Dataset
from ..core.errors import DataError, ParameterError
from ..core.metric import DistanceMetric, distances_to, pairwise_distances
from ..core.scores import Method, NeighborSet, OutlierScore, Ranking, build_ranking
from .neighbors import Backend, NeighborIndex, NeighborTable, build_index

logger = logging.getLogger("ldof.ldof")


def suggest_k(dimension: int) -> int:
    """Default neighbourhood size: enough points to surround a record in d dimensions."""
    return max(int(dimension) + 1, 10)


def knn_distance(dataset: Dataset, neighbor_set: NeighborSet,
                 metric: DistanceMetric = DistanceMetric.EUCLIDEAN) -> float:
    if len(neighbor_set) == 0:
        raise DataError(f"record {neighbor_set.query_id} has no neighbours")
    x = dataset.features
    dists = distances_to(metric, x[neighbor_set.ids], x[neighbor_set.query_id])
    return float(dists.mean())


def knn_inner_distance(dataset: Dataset, neighbor_set: NeighborSet,
                       metric: DistanceMetric = DistanceMetric.EUCLIDEAN) -> float:
    # mean over unordered pairs equals the mean over ordered pairs i != i'
    if len(neighbor_set) < 2:
        raise DataError(f"record {neighbor_set.query_id}: inner distance needs at least "
                        f"2 neighbours, got {len(neighbor_set)}")
    return float(pairwise_distances(metric, dataset.features[neighbor_set.ids]).mean())


def ldof_ratio(knn_dist: float, knn_inner_dist: float) -> float:
    if knn_inner_dist > 0:
        return knn_dist / knn_inner_dist
    # coincident neighbours: a distinct query is maximally outlying, a coincident one is not
    return math.inf if knn_dist > 0 else 0.0


def _check_k(k: int, size: Optional[int] = None) -> None:
    if int(k) < 2:
        raise ParameterError(f"LDOF needs k >= 2 so the inner distance is defined, got k={k}")
    if size is not None and size <= k:
        raise ParameterError(
            f"k={k} needs more than {k} records, dataset has {size}; choose a smaller k")


def _score(record_id: int, knn_dist: float, knn_inner_dist: float) -> OutlierScore:
    value = ldof_ratio(knn_dist, knn_inner_dist)
    return OutlierScore(
        id=int(record_id), score=value, knn_dist=knn_dist,
        knn_inner_dist=knn_inner_dist, pruned=value < ldof_lower_bound(),
    )


def ldof_score(dataset: Dataset, record_id: int, k: int,
               metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
               index: Optional[NeighborIndex] = None) -> OutlierScore:
    _check_k(k)
    dataset.check_id(record_id)
    if index is None:
        index = build_index(dataset, metric=metric)
    neighbor_set = index.k_nearest(record_id, k)
    return _score(record_id, knn_distance(dataset, neighbor_set, metric),
                  knn_inner_distance(dataset, neighbor_set, metric))


def ldof_scores(dataset: Dataset, table: NeighborTable,
                metric: DistanceMetric = DistanceMetric.EUCLIDEAN) -> List[OutlierScore]:
    """Scores of every record from a materialised neighbour table."""
    x = dataset.features
    knn_dists = table.distances.mean(axis=1)
    scores = []
    for i in range(dataset.size):
        inner = float(pairwise_distances(metric, x[table.ids[i]]).mean())
        scores.append(_score(i, float(knn_dists[i]), inner))
    return scores


def top_n_ldof(dataset: Dataset, n: int, k: int,
               metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
               backend: Union[Backend, str] = Backend.TREE,
               prune: bool = True,
               index: Optional[NeighborIndex] = None,
               table: Optional[NeighborTable] = None) -> Ranking:
    """Top-n LDOF. Records below the lower bound are discarded before
    ranking, so the result may be shorter than n."""
    if int(n) < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    _check_k(k, dataset.size)
    if table is None:
        if index is None:
            index = build_index(dataset, metric=metric, backend=backend)
        table = index.table(k)
    elif table.k != k:
        table = table.prefix(k)
    scores = ldof_scores(dataset, table, metric)
    if not prune:
        scores = [OutlierScore(s.id, s.score, s.knn_dist, s.knn_inner_dist, False) for s in scores]
    ranking = build_ranking(Method.LDOF, int(n), int(k), scores)
    logger.debug(f"top-{n} LDOF k={k} on {dataset.name}: {len(ranking.pruned_ids)} pruned, "
                 f"{len(ranking)} returned")
    return ranking


def pruning_violations(pruned: Ranking, reference: Ranking, scores: Optional[List[OutlierScore]] = None) -> int:
    """Count pruning faults: pruned records scoring >= the lower bound, and
    reported entries that differ from the no-pruning reference prefix."""
    faults = 0
    if scores is not None:
        lb = ldof_lower_bound()
        faults += sum(1 for s in scores if s.pruned and s.score >= lb)
    if pruned.ids != reference.ids[:len(pruned)]:
        faults += 1
    return faults
