"""LDOF Telemetry Module
Timers and counters for detection passes, sweep runs and the
scaling benchmark.
"""
import time
import logging
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Deque, Dict, Iterator, NamedTuple, Optional

import numpy as np

logger = logging.getLogger("ldof.telemetry")


class MetricType(Enum):
    COUNTER = "counter"
    GAUGE = "gauge"
    TIMER = "timer"


class Sample(NamedTuple):
    value: float
    labels: Dict[str, str]
    at: float


@dataclass
class MetricSeries:
    metric_type: MetricType
    samples: Deque[Sample]

    @property
    def values(self) -> np.ndarray:
        return np.fromiter((s.value for s in self.samples), dtype=np.float64, count=len(self.samples))

    @property
    def latest(self) -> Optional[float]:
        return self.samples[-1].value if self.samples else None

    def summary(self) -> Dict[str, Any]:
        v = self.values
        out: Dict[str, Any] = {"type": self.metric_type.value, "count": int(v.size), "latest": float(v[-1])}
        if self.metric_type is MetricType.COUNTER:
            return out
        out.update(mean=float(v.mean()), min=float(v.min()), max=float(v.max()),
                   median=float(np.median(v)))
        if self.metric_type is MetricType.TIMER:
            out["total"] = float(v.sum())
        return out


@dataclass
class TelemetryCollector:
    """In-process metric series keyed by name; the oldest samples drop
    out past `retention`."""

    retention: int = 10000
    series: Dict[str, MetricSeries] = field(default_factory=dict)

    def _record(self, name: str, metric_type: MetricType, value: float, labels: Dict[str, Any]) -> None:
        s = self.series.get(name)
        if s is None:
            s = self.series[name] = MetricSeries(metric_type, deque(maxlen=self.retention))
        elif s.metric_type is not metric_type:
            raise ValueError(f"metric {name!r} is a {s.metric_type.value}, not a {metric_type.value}")
        s.samples.append(Sample(float(value), {k: str(v) for k, v in labels.items()}, time.time()))

    def increment(self, name: str, value: float = 1.0, **labels: Any) -> None:
        s = self.series.get(name)
        self._record(name, MetricType.COUNTER, ((s.latest if s else None) or 0.0) + value, labels)

    def gauge(self, name: str, value: float, **labels: Any) -> None:
        self._record(name, MetricType.GAUGE, value, labels)

    def timer(self, name: str, seconds: float, **labels: Any) -> None:
        self._record(name, MetricType.TIMER, seconds, labels)

    @contextmanager
    def timed(self, name: str, **labels: Any) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.timer(name, elapsed, **labels)
            logger.debug(f"{name} took {elapsed:.4f}s")

    def latest(self, name: str) -> Optional[float]:
        s = self.series.get(name)
        return s.latest if s else None

    def snapshot(self) -> Dict[str, Dict[str, Any]]:
        return {name: s.summary() for name, s in self.series.items() if s.samples}
