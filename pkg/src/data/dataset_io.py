"""LDOF Dataset I/O
CSV ingestion (generic layout plus the WDBC and Shuttle presets),
label filtering, and serialization of datasets, rankings and sweep
reports.
"""
import json
import logging
from pathlib import Path
from typing import AbstractSet, Any, Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, model_validator

from ..core.dataset import Dataset
from ..core.errors import DataError, DataFormatError, ParameterError
from ..core.scores import Ranking

logger = logging.getLogger("ldof.io")

REPORT_SCHEMA_VERSION = 1
WHITESPACE = "whitespace"

PathLike = Union[str, Path]


class CsvSchema(BaseModel):
    delimiter: str = ","
    has_header: bool = False
    id_column: Optional[int] = None
    label_column: Optional[int] = None
    feature_columns: Union[List[int], str] = "rest"
    standardize: bool = False

    @model_validator(mode="after")
    def _columns(self) -> "CsvSchema":
        if isinstance(self.feature_columns, str):
            if self.feature_columns != "rest":
                raise ValueError("feature_columns must be a list of indices or 'rest'")
            return self
        if not self.feature_columns:
            raise ValueError("feature_columns must not be empty")
        reserved = {c for c in (self.id_column, self.label_column) if c is not None}
        if reserved & set(self.feature_columns):
            raise ValueError("feature columns overlap the id/label columns")
        return self

    def resolve_features(self, width: int) -> List[int]:
        reserved = {c for c in (self.id_column, self.label_column) if c is not None}
        if self.feature_columns == "rest":
            cols = [c for c in range(width) if c not in reserved]
        else:
            cols = list(self.feature_columns)
        bad = [c for c in cols + sorted(reserved) if not 0 <= c < width]
        if bad:
            raise DataError(f"schema refers to columns {bad} but rows have {width} fields")
        if not cols:
            raise DataError("no feature columns left after removing id/label columns")
        return cols


# UCI wdbc.data: id, diagnosis (B/M), 30 real-valued features
WDBC = CsvSchema(delimiter=",", has_header=False, id_column=0, label_column=1)
# UCI shuttle.tst: 9 features then the class label 1-7, space separated
SHUTTLE = CsvSchema(delimiter=WHITESPACE, has_header=False, label_column=9, feature_columns=list(range(9)))
# the layout written by write_dataset_csv
DATASET = CsvSchema(delimiter=",", has_header=True, id_column=0, label_column=1)

PRESETS: Dict[str, CsvSchema] = {"wdbc": WDBC, "shuttle": SHUTTLE, "dataset": DATASET, "default": CsvSchema()}


def schema_for(preset: str, **overrides: Any) -> CsvSchema:
    if preset not in PRESETS:
        raise ParameterError(f"unknown schema preset {preset!r} (expected one of {', '.join(PRESETS)})")
    return PRESETS[preset].model_copy(update=overrides)


def _read_table(path: Path, schema: CsvSchema) -> pd.DataFrame:
    kwargs: Dict[str, Any] = {
        "header": 0 if schema.has_header else None,
        "dtype": str,
        "keep_default_na": False,
        "skip_blank_lines": True,
        "encoding": "utf-8",
    }
    if schema.delimiter == WHITESPACE:
        kwargs["sep"] = r"\s+"
    else:
        kwargs["sep"] = schema.delimiter
    try:
        return pd.read_csv(path, **kwargs)
    except FileNotFoundError as e:
        raise DataFormatError("file not found", path=str(path)) from e
    except pd.errors.EmptyDataError as e:
        raise DataFormatError("file is empty", path=str(path)) from e
    except pd.errors.ParserError as e:
        raise DataFormatError(f"ragged rows: {e}", path=str(path)) from e


def _parse_cells(raw: pd.DataFrame) -> np.ndarray:
    """Cell by cell float parse; unparsable cells become NaN."""
    def parse(cell: Any) -> float:
        try:
            return float(cell)
        except (ValueError, TypeError):
            return np.nan

    return np.vectorize(parse, otypes=[np.float64])(raw.to_numpy(dtype=object))


def load_csv(path: PathLike, schema: Optional[CsvSchema] = None) -> Dataset:
    schema = schema or CsvSchema()
    p = Path(path)
    table = _read_table(p, schema)
    if table.empty:
        raise DataFormatError("file has no records", path=str(p))
    first_line = 2 if schema.has_header else 1
    # short rows may come back padded with NaN
    short = table.isna().any(axis=1).to_numpy()
    if short.any():
        row = int(np.flatnonzero(short)[0])
        raise DataFormatError(
            f"ragged row: expected {table.shape[1]} fields", path=str(p), line=row + first_line)
    cols = schema.resolve_features(table.shape[1])
    raw = table.iloc[:, cols]
    try:
        features = raw.astype(np.float64).to_numpy()
    except (ValueError, TypeError):
        features = _parse_cells(raw)
    bad = ~np.isfinite(features)
    if bad.any():
        row, col = (int(v) for v in np.argwhere(bad)[0])
        raise DataFormatError(
            f"non-numeric or non-finite feature {raw.iat[row, col]!r} in column {cols[col]}",
            path=str(p), line=row + first_line)
    labels = None
    if schema.label_column is not None:
        labels = tuple(v.strip() or None for v in table.iloc[:, schema.label_column].astype(str))
    source_ids = None
    if schema.id_column is not None:
        parsed = pd.to_numeric(table.iloc[:, schema.id_column], errors="coerce")
        if parsed.notna().all() and (parsed % 1 == 0).all():
            source_ids = parsed.astype(np.int64).to_numpy()
    dataset = Dataset(
        features, labels=labels, name=p.stem,
        source_ids=source_ids, metadata={"path": str(p)},
    )
    if schema.standardize:
        dataset = dataset.standardized()
    logger.info(f"Loaded {p}: N={dataset.size}, d={dataset.dimension}")
    return dataset


LabelFilter = Union[str, AbstractSet[str], Callable[[Optional[str]], bool]]


def filter_by_label(dataset: Dataset, predicate: LabelFilter) -> Dataset:
    """Records whose label satisfies `predicate` (equals it for a string, is
    one of it for a set), re-indexed from 0; `source_ids` keeps the original ids."""
    if dataset.labels is None:
        raise DataError(f"{dataset.name} has no labels to filter on")
    if isinstance(predicate, str):
        test: Callable[[Optional[str]], bool] = lambda v: v == predicate
        suffix = predicate
    elif isinstance(predicate, AbstractSet):
        test = lambda v: v in predicate
        suffix = "+".join(sorted(predicate))
    else:
        test, suffix = predicate, "filtered"
    ids = [i for i, v in enumerate(dataset.labels) if test(v)]
    if not ids:
        raise DataError(f"no record of {dataset.name} matches the label filter")
    return dataset.subset(ids, name=f"{dataset.name}[{suffix}]")


def write_dataset_csv(dataset: Dataset, path: PathLike) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.features, columns=[f"f{i}" for i in range(dataset.dimension)])
    frame.insert(0, "label", list(dataset.labels) if dataset.labels is not None else [None] * dataset.size)
    frame.insert(0, "id", np.arange(dataset.size))
    frame.to_csv(p, index=False, float_format=None)
    return p


def ranking_frame(ranking: Ranking) -> pd.DataFrame:
    rows = []
    for rank, e in enumerate(ranking.entries, start=1):
        rows.append({
            "rank": rank, "id": e.id, "score": e.score,
            "knn_dist": e.knn_dist, "knn_inner_dist": e.knn_inner_dist,
        })
    frame = pd.DataFrame(rows, columns=["rank", "id", "score", "knn_dist", "knn_inner_dist"])
    if all(e.knn_dist is None for e in ranking.entries):
        frame = frame.drop(columns=["knn_dist", "knn_inner_dist"])
    return frame


def write_ranking_csv(ranking: Ranking, path: PathLike) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    ranking_frame(ranking).to_csv(p, index=False)
    return p


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (set, frozenset, tuple)):
        return sorted(value) if isinstance(value, (set, frozenset)) else list(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_report(report, prefix: PathLike) -> Dict[str, Path]:
    """Write `<prefix>_cells.csv`, `<prefix>_aggregate.csv` and `<prefix>.json`."""
    base = Path(prefix)
    base.parent.mkdir(parents=True, exist_ok=True)
    paths = {
        "cells": base.with_name(f"{base.name}_cells.csv"),
        "aggregate": base.with_name(f"{base.name}_aggregate.csv"),
        "json": base.with_name(f"{base.name}.json"),
    }
    report.to_frame().to_csv(paths["cells"], index=False)
    report.aggregate().to_csv(paths["aggregate"], index=False)
    document = {"schema_version": REPORT_SCHEMA_VERSION, **report.to_dict()}
    paths["json"].write_text(json.dumps(document, indent=2, default=_json_default), encoding="utf-8")
    logger.info(f"Report written to {paths['json']}")
    return paths
