"""LDOF Core Package
Domain types and the ambient services shared by the detectors.
"""
from .config import ConfigManager, available_cores
from .dataset import Dataset, Record
from .errors import (
    LdofError,
    ParameterError,
    ConfigError,
    DataError,
    DataFormatError,
    MalformedInputError,
    SceneError,
    InternalError,
    FailureType,
)
from .metric import DistanceMetric, distance, distances_to, pairwise_distances
from .pipeline_manager import PipelineManager, PipelineStage, PipelineRun, StageStatus
from .scores import Method, NeighborSet, OutlierScore, Ranking, build_ranking
from .telemetry import TelemetryCollector, MetricType

__all__ = [
    "ConfigManager",
    "available_cores",
    "Dataset",
    "Record",
    "LdofError",
    "ParameterError",
    "ConfigError",
    "DataError",
    "DataFormatError",
    "MalformedInputError",
    "SceneError",
    "InternalError",
    "FailureType",
    "DistanceMetric",
    "distance",
    "distances_to",
    "pairwise_distances",
    "PipelineManager",
    "PipelineStage",
    "PipelineRun",
    "StageStatus",
    "Method",
    "NeighborSet",
    "OutlierScore",
    "Ranking",
    "build_ranking",
    "TelemetryCollector",
    "MetricType",
]
