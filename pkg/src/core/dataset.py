"""LDOF Dataset Types
Immutable fixed-dimension feature matrices with record identity
and optional ground-truth labels.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from .errors import MalformedInputError

logger = logging.getLogger("ldof.dataset")


@dataclass(frozen=True)
class Record:
    id: int
    features: Tuple[float, ...]
    label: Optional[str] = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """N records of dimension d; record ids are row indices 0..N-1.

    `source_ids` maps each row back to the id it had in the dataset it was
    derived from (filtering, mixing, subsampling), when there was one.
    """

    features: np.ndarray
    labels: Optional[Tuple[Optional[str], ...]] = None
    name: str = "dataset"
    source_ids: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64, copy=True)
        if x.ndim != 2:
            raise MalformedInputError(f"features must be a 2-D matrix, got {x.ndim}-D")
        if x.shape[1] < 1:
            raise MalformedInputError("dimension must be at least 1")
        if not np.isfinite(x).all():
            row = int(np.argwhere(~np.isfinite(x))[0][0])
            raise MalformedInputError(f"record {row} has a non-finite feature value")
        x.setflags(write=False)
        object.__setattr__(self, "features", x)
        if self.labels is not None:
            labels = tuple(None if v is None else str(v) for v in self.labels)
            if len(labels) != x.shape[0]:
                raise MalformedInputError(
                    f"{len(labels)} labels for {x.shape[0]} records")
            object.__setattr__(self, "labels", labels)
        if self.source_ids is not None:
            src = np.array(self.source_ids, dtype=np.int64, copy=True)
            if src.shape != (x.shape[0],):
                raise MalformedInputError("source_ids must have one entry per record")
            src.setflags(write=False)
            object.__setattr__(self, "source_ids", src)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]],
                  labels: Optional[Sequence[Optional[str]]] = None,
                  name: str = "dataset", **kwargs) -> "Dataset":
        rows = list(rows)
        if not rows:
            raise MalformedInputError("dataset has no records")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise MalformedInputError(
                    f"ragged rows: record {i} has {len(row)} features, expected {width}")
        return cls(np.asarray(rows, dtype=np.float64), labels=labels, name=name, **kwargs)

    @property
    def size(self) -> int:
        return int(self.features.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.features.shape[1])

    def __len__(self) -> int:
        return self.size

    def record(self, record_id: int) -> Record:
        self.check_id(record_id)
        label = self.labels[record_id] if self.labels is not None else None
        return Record(id=int(record_id), features=tuple(self.features[record_id].tolist()), label=label)

    @property
    def records(self) -> Iterator[Record]:
        return (self.record(i) for i in range(self.size))

    def check_id(self, record_id: int) -> None:
        if not 0 <= int(record_id) < self.size:
            raise MalformedInputError(f"unknown record id {record_id} (dataset has {self.size})")

    def ids_with_label(self, label: str) -> frozenset:
        if self.labels is None:
            return frozenset()
        return frozenset(i for i, v in enumerate(self.labels) if v == label)

    def subset(self, ids: Sequence[int], name: Optional[str] = None) -> "Dataset":
        """Rows `ids` as a new dataset with fresh sequential ids."""
        idx = np.asarray(ids, dtype=np.int64)
        labels = None
        if self.labels is not None:
            labels = tuple(self.labels[i] for i in idx)
        source = self.source_ids[idx] if self.source_ids is not None else idx
        return Dataset(
            self.features[idx], labels=labels, name=name or self.name,
            source_ids=source, metadata=dict(self.metadata),
        )

    @staticmethod
    def concat(first: "Dataset", second: "Dataset", name: Optional[str] = None) -> "Dataset":
        if first.dimension != second.dimension:
            raise MalformedInputError(
                f"cannot join datasets of dimension {first.dimension} and {second.dimension}")
        labels = None
        if first.labels is not None or second.labels is not None:
            labels = (first.labels or (None,) * first.size) + (second.labels or (None,) * second.size)
        return Dataset(
            np.vstack([first.features, second.features]), labels=labels,
            name=name or f"{first.name}+{second.name}",
        )

    def standardized(self) -> "Dataset":
        """Z-score every feature over the records; constant features become 0."""
        x = self.features
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        constant = std == 0
        if constant.any():
            cols = np.flatnonzero(constant).tolist()
            logger.warning(f"{self.name}: constant features {cols} mapped to zero")
        scaled = (x - mean) / np.where(constant, 1.0, std)
        scaled[:, constant] = 0.0
        return Dataset(scaled, labels=self.labels, name=self.name,
                       source_ids=self.source_ids, metadata=dict(self.metadata, standardized=True))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and self.labels == other.labels
        )

    __hash__ = None  # type: ignore[assignment]
