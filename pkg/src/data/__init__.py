"""LDOF Data Package
CSV ingestion and result serialization.
"""
from .dataset_io import (
    CsvSchema,
    DATASET,
    SHUTTLE,
    WDBC,
    filter_by_label,
    load_csv,
    schema_for,
    write_dataset_csv,
    write_ranking_csv,
    write_report,
)

__all__ = [
    "CsvSchema",
    "DATASET",
    "SHUTTLE",
    "WDBC",
    "filter_by_label",
    "load_csv",
    "schema_for",
    "write_dataset_csv",
    "write_ranking_csv",
    "write_report",
]
