"""LDOF Score Types
Neighbour sets, per-record outlier scores and top-n rankings.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np

from .errors import ParameterError


class Method(Enum):
    LDOF = "ldof"
    KNN = "knn"
    LOF = "lof"

    @classmethod
    def parse(cls, value: Union[str, "Method"]) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ParameterError(f"unknown method {value!r} (expected ldof, knn or lof)") from None


@dataclass(frozen=True, eq=False)
class NeighborSet:
    """The k nearest neighbours of `query_id`, query excluded,
    ordered by (distance, id)."""

    query_id: int
    k: int
    ids: np.ndarray
    distances: np.ndarray

    @property
    def neighbors(self) -> List[Tuple[int, float]]:
        return [(int(i), float(d)) for i, d in zip(self.ids, self.distances)]

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NeighborSet):
            return NotImplemented
        return (
            self.query_id == other.query_id
            and np.array_equal(self.ids, other.ids)
            and np.array_equal(self.distances, other.distances)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class OutlierScore:
    id: int
    score: float
    knn_dist: Optional[float] = None
    knn_inner_dist: Optional[float] = None
    pruned: bool = False


@dataclass(frozen=True)
class Ranking:
    method: Method
    n: int
    k: int
    entries: Tuple[OutlierScore, ...]
    pruned_ids: Tuple[int, ...] = field(default=())

    @property
    def ids(self) -> List[int]:
        return [e.id for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def ranking_order(ids: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Positions sorted by score descending, ties by ascending id."""
    return np.lexsort((ids, -scores))


def build_ranking(method: Method, n: int, k: int, scores: List[OutlierScore]) -> Ranking:
    """Top-n of the unpruned scores; pruned records are reported separately."""
    kept = [s for s in scores if not s.pruned]
    pruned = tuple(sorted(s.id for s in scores if s.pruned))
    if not kept:
        return Ranking(method=method, n=n, k=k, entries=(), pruned_ids=pruned)
    ids = np.array([s.id for s in kept], dtype=np.int64)
    values = np.array([s.score for s in kept], dtype=np.float64)
    order = ranking_order(ids, values)[:n]
    return Ranking(
        method=method, n=n, k=k,
        entries=tuple(kept[i] for i in order),
        pruned_ids=pruned,
    )
