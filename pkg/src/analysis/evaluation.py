"""LDOF Evaluation
Precision of top-n rankings, k-sweeps over repeated runs, the
real-data mixing/subsampling protocols, Monte-Carlo checks of the
two theorems and a scaling benchmark.
"""
import logging
import zlib
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..core.dataset import Dataset
from ..core.errors import DataError, LdofError, ParameterError, record_incident
from ..core.metric import DistanceMetric, distances_to, pairwise_distances
from ..core.pipeline_manager import PipelineManager, PipelineStage
from ..core.scores import Method, OutlierScore, Ranking, build_ranking
from ..core.telemetry import TelemetryCollector
from ..detectors.baselines import top_n_knn, top_n_lof
from ..detectors.ldof import ldof_ratio, ldof_score, ldof_scores, pruning_violations, top_n_ldof
from ..detectors.neighbors import Backend, build_index
from .datagen import make_rng, uniform_ball_points
from .theory import expected_ldof_center, false_detection_bound

logger = logging.getLogger("ldof.eval")

Truth = FrozenSet[int]
RunFactory = Callable[[int, int], Tuple[Dataset, Truth]]


def derive_seed(base: int, *parts: Any) -> int:
    """Stable seed for a (base, part...) tuple, independent of execution order."""
    words = [int(base) & 0xFFFFFFFF, (int(base) >> 32) & 0xFFFFFFFF]
    for p in parts:
        if isinstance(p, Method):
            p = p.value
        if isinstance(p, (int, np.integer)):
            words.append(int(p) & 0xFFFFFFFF)
        else:
            words.append(zlib.crc32(str(p).encode("utf-8")))
    state = np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)
    return int(state[0])


def precision(ranking: Ranking, truth: Iterable[int]) -> float:
    """Share of true outliers among the top-n; missing slots count as misses."""
    truth = frozenset(int(t) for t in truth)
    if not truth:
        raise DataError("precision is undefined without true outliers")
    if ranking.n < 1:
        raise ParameterError(f"n must be at least 1, got {ranking.n}")
    hits = len(set(ranking.ids[:ranking.n]) & truth)
    return hits / ranking.n


def mix_outliers(normal: Dataset, outlier_pool: Dataset, count: int, mode: str = "first",
                 seed: int = 0) -> Tuple[Dataset, Truth]:
    if count < 0:
        raise ParameterError(f"count must be non-negative, got {count}")
    if count > outlier_pool.size:
        raise DataError(f"cannot draw {count} outliers from a pool of {outlier_pool.size}")
    if count == 0:
        return normal, frozenset()
    if mode == "first":
        chosen = np.arange(count)
    elif mode == "random":
        chosen = np.sort(make_rng(seed).choice(outlier_pool.size, size=count, replace=False))
    else:
        raise ParameterError(f"unknown mixing mode {mode!r} (expected first or random)")
    picked = outlier_pool.subset(chosen)
    mixed = Dataset.concat(normal, picked, name=f"{normal.name}+{count}{outlier_pool.name}")
    mixed.metadata.update({"outlier_source_ids": picked.source_ids.tolist(), "seed": seed})
    truth = frozenset(range(normal.size, normal.size + count))
    return mixed, truth


def subsample_normals(dataset: Dataset, count: int, seed: int) -> Dataset:
    if count < 0 or count > dataset.size:
        raise DataError(f"cannot sample {count} of {dataset.size} records")
    chosen = np.sort(make_rng(seed).choice(dataset.size, size=count, replace=False))
    return dataset.subset(chosen, name=f"{dataset.name}[{count}]")


def mixing_protocol(normal: Dataset, outlier_pool: Dataset, count: int, mode: str = "random") -> RunFactory:
    def make_run(run: int, seed: int) -> Tuple[Dataset, Truth]:
        return mix_outliers(normal, outlier_pool, count, mode=mode, seed=seed)
    return make_run


def subsample_protocol(normal: Dataset, outliers: Dataset, sample_size: int) -> RunFactory:
    def make_run(run: int, seed: int) -> Tuple[Dataset, Truth]:
        sample = subsample_normals(normal, sample_size, seed)
        mixed = Dataset.concat(sample, outliers, name=f"{normal.name}[{sample_size}]+{outliers.name}")
        return mixed, frozenset(range(sample.size, sample.size + outliers.size))
    return make_run


@dataclass
class TrialSpec:
    k_min: int
    k_max: int
    n: int
    methods: Tuple[Method, ...] = (Method.LDOF, Method.KNN, Method.LOF)
    runs: int = 1
    seed: int = 0
    outlier_count: Optional[int] = None
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN
    backend: Backend = Backend.TREE

    @property
    def k_values(self) -> List[int]:
        return list(range(self.k_min, self.k_max + 1))

    def validate(self, size: Optional[int] = None) -> None:
        if self.k_max < self.k_min:
            raise ParameterError(f"empty k-range [{self.k_min}, {self.k_max}]")
        if self.k_min < 2:
            raise ParameterError(f"k-range must start at 2 or above, got {self.k_min}")
        if size is not None and self.k_max > size - 1:
            raise ParameterError(f"k-range ends at {self.k_max} but only {size - 1} neighbours exist")
        if self.runs < 1:
            raise ParameterError(f"runs must be at least 1, got {self.runs}")
        if self.n < 1:
            raise ParameterError(f"n must be at least 1, got {self.n}")
        if not self.methods:
            raise ParameterError("no methods selected")


@dataclass
class SweepCell:
    method: Method
    k: int
    run: int
    seed: int
    precision: Optional[float] = None
    error: Optional[str] = None
    failure_type: Optional[str] = None
    ranked_ids: Tuple[int, ...] = ()


@dataclass
class SweepReport:
    cells: List[SweepCell]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {
                "method": c.method.value, "k": c.k, "run": c.run, "seed": c.seed,
                "precision": c.precision, "error": c.error, "failure_type": c.failure_type,
            }
            for c in self.cells
        ], columns=["method", "k", "run", "seed", "precision", "error", "failure_type"]).astype({"precision": float})

    def aggregate(self) -> pd.DataFrame:
        """Mean and population std of precision per (method, k)."""
        frame = self.to_frame()
        grouped = frame.groupby(["method", "k"], sort=True)["precision"]
        out = grouped.agg(
            mean="mean",
            std=lambda s: float(np.std(s.dropna().to_numpy())) if s.notna().any() else np.nan,
            runs="count",
        ).reset_index()
        out["missing"] = frame.groupby(["method", "k"], sort=True)["precision"].apply(
            lambda s: int(s.isna().sum())).to_numpy()
        return out

    def cell_value(self, method: Method, k: int) -> Optional[float]:
        values = [c.precision for c in self.cells
                  if c.method is method and c.k == k and c.precision is not None]
        return float(np.mean(values)) if values else None

    def pooled(self, method: Method, k_lo: int, k_hi: int) -> Tuple[float, float]:
        """Mean and std over every (k, run) cell with k in [k_lo, k_hi]."""
        values = np.array([c.precision for c in self.cells
                           if c.method is method and k_lo <= c.k <= k_hi and c.precision is not None])
        if values.size == 0:
            raise DataError(f"no precision values for {method.value} over k in [{k_lo}, {k_hi}]")
        return float(values.mean()), float(values.std())

    def precision_vector(self, method: Method) -> np.ndarray:
        """Run-averaged precision per k, in k order."""
        ks = sorted({c.k for c in self.cells})
        return np.array([np.nan if self.cell_value(method, k) is None else self.cell_value(method, k)
                         for k in ks])

    def run_vectors(self, method: Method) -> Dict[int, List[Optional[float]]]:
        """Per-run precision vectors over k, for external paired tests."""
        ks = sorted({c.k for c in self.cells})
        by_run: Dict[int, Dict[int, Optional[float]]] = {}
        for c in self.cells:
            if c.method is method:
                by_run.setdefault(c.run, {})[c.k] = c.precision
        return {run: [vals.get(k) for k in ks] for run, vals in sorted(by_run.items())}

    def to_dict(self) -> Dict[str, Any]:
        methods = sorted({c.method for c in self.cells}, key=lambda m: m.value)
        return {
            "metadata": self.metadata,
            "aggregate": _records(self.aggregate()),
            "runs": {m.value: {str(r): v for r, v in self.run_vectors(m).items()} for m in methods},
            "cells": _records(self.to_frame()),
        }


def _records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    return frame.astype(object).where(frame.notna(), None).to_dict(orient="records")


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    """Paired t statistic and two-sided p-value of a against b."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ParameterError("paired test needs two equal-length vectors of at least 2 values")
    result = stats.ttest_rel(x, y)
    return float(result.statistic), float(result.pvalue)


def _ldof_cell(dataset: Dataset, table, n: int, k: int, metric: DistanceMetric) -> Tuple[Ranking, int]:
    scores = ldof_scores(dataset, table, metric)
    ranking = build_ranking(Method.LDOF, n, k, scores)
    reference = build_ranking(
        Method.LDOF, n, k,
        [OutlierScore(s.id, s.score, s.knn_dist, s.knn_inner_dist, False) for s in scores],
    )
    return ranking, pruning_violations(ranking, reference, scores)


def _run_cells(make_run: RunFactory, run: int, trial: TrialSpec) -> Dict[str, Any]:
    run_seed = derive_seed(trial.seed, "run", run)
    dataset, truth = make_run(run, run_seed)
    trial.validate(dataset.size)
    index = build_index(dataset, metric=trial.metric, backend=trial.backend)
    full = index.table(trial.k_max)
    cells: List[SweepCell] = []
    violations = 0
    for method in trial.methods:
        for k in trial.k_values:
            cell = SweepCell(method=method, k=k, run=run, seed=derive_seed(trial.seed, method, k, run))
            try:
                table = full.prefix(k)
                if method is Method.LDOF:
                    ranking, faults = _ldof_cell(dataset, table, trial.n, k, trial.metric)
                    violations += faults
                elif method is Method.KNN:
                    ranking = top_n_knn(dataset, trial.n, k, trial.metric, table=table)
                else:
                    ranking = top_n_lof(dataset, trial.n, k, trial.metric, table=table)
                cell.ranked_ids = tuple(ranking.ids)
                cell.precision = precision(ranking, truth)
            except LdofError as e:
                cell.error = str(e)
                cell.failure_type = record_incident(f"{method.value} k={k} run={run}", e).failure_type.value
            cells.append(cell)
    return {"cells": cells, "pruning_violations": violations, "size": dataset.size,
            "truth": sorted(truth), "run_seed": run_seed}


def run_protocol(make_run: RunFactory, trial: TrialSpec, threads: int = 1,
                 name: str = "sweep", telemetry: Optional[TelemetryCollector] = None) -> SweepReport:
    """Sweep k for every run of a protocol; runs execute in parallel and
    each run's failure becomes missing cells carrying the reason."""
    trial.validate()
    manager = PipelineManager(max_parallel=threads)
    stages = [PipelineStage(name=f"run-{r}", handler=partial(_run_cells, make_run, r, trial))
              for r in range(trial.runs)]
    result = manager.run(name, stages)
    telemetry = telemetry or TelemetryCollector()
    cells: List[SweepCell] = []
    violations = 0
    sizes = {}
    done = result.results()
    for r in range(trial.runs):
        stage = result.stages[f"run-{r}"]
        telemetry.timer("sweep.run", stage.duration, run=r)
        outcome = done.get(stage.name)
        if outcome is not None:
            cells.extend(outcome["cells"])
            violations += outcome["pruning_violations"]
            sizes[r] = outcome["size"]
            continue
        for method in trial.methods:
            for k in trial.k_values:
                cells.append(SweepCell(
                    method=method, k=k, run=r, seed=derive_seed(trial.seed, method, k, r),
                    error=stage.error,
                    failure_type=stage.failure_type.value if stage.failure_type else None,
                ))
    failed = sum(1 for c in cells if c.precision is None)
    telemetry.increment("sweep.cells", len(cells))
    if failed:
        telemetry.increment("sweep.failed_cells", failed)
    if violations:
        logger.warning(f"{name}: {violations} pruning violations (seed={trial.seed})")
    report = SweepReport(cells=cells, metadata={
        "name": name,
        "n": trial.n,
        "k_range": [trial.k_min, trial.k_max],
        "runs": trial.runs,
        "seed": trial.seed,
        "methods": [m.value for m in trial.methods],
        "metric": trial.metric.value,
        "backend": trial.backend.value,
        "outlier_count": trial.outlier_count,
        "sizes": sizes,
        "pruning_violations": violations,
    })
    return report


def sweep_k(dataset: Dataset, truth: Iterable[int], trial: TrialSpec, threads: int = 1,
            telemetry: Optional[TelemetryCollector] = None) -> SweepReport:
    trial.validate(dataset.size)
    truth = frozenset(truth)
    return run_protocol(lambda run, seed: (dataset, truth), trial, threads=threads, name=dataset.name,
                        telemetry=telemetry)


@dataclass(frozen=True)
class Theorem1Report:
    d: int
    k: int
    samples: int
    trials: int
    seed: int
    mean: float
    std: float
    tolerance: float
    values: Tuple[float, ...] = ()
    expected: float = 0.5

    @property
    def deviation(self) -> float:
        return abs(self.mean - self.expected)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def verify_theorem1(d: int, k: int, samples: int, trials: int, seed: int,
                    metric: DistanceMetric = DistanceMetric.SQUARED_EUCLIDEAN,
                    tolerance: float = 0.05) -> Theorem1Report:
    """LDOF of a query planted at the centre of a uniform unit d-ball."""
    if k > samples:
        raise ParameterError(f"k={k} exceeds the {samples} sampled points")
    if k < 2 or trials < 1:
        raise ParameterError(f"need k >= 2 and trials >= 1, got k={k}, trials={trials}")
    values = []
    for t in range(trials):
        rng = make_rng(derive_seed(seed, "theorem1", t))
        points = uniform_ball_points(rng, d, 1.0, samples)
        cloud = Dataset(np.vstack([np.zeros((1, d)), points]), name=f"ball-d{d}")
        index = build_index(cloud, metric=metric, backend=Backend.BRUTE_FORCE)
        values.append(ldof_score(cloud, 0, k, metric, index).score)
    arr = np.array(values)
    report = Theorem1Report(d=d, k=k, samples=samples, trials=trials, seed=seed,
                            mean=float(arr.mean()), std=float(arr.std()),
                            tolerance=tolerance, values=tuple(values),
                            expected=expected_ldof_center(d))
    logger.info(f"theorem 1 d={d} k={k}: mean LDOF {report.mean:.4f} (deviation {report.deviation:.4f})")
    return report


@dataclass(frozen=True)
class Theorem2Report:
    d: int
    k: int
    c: float
    trials: int
    seed: int
    exceedances: int
    bound: float

    @property
    def frequency(self) -> float:
        return self.exceedances / self.trials

    @property
    def violated(self) -> bool:
        return self.frequency > self.bound


def verify_theorem2(d: int, k: int, c: float, trials: int, seed: int,
                    metric: DistanceMetric = DistanceMetric.SQUARED_EUCLIDEAN) -> Theorem2Report:
    """How often the centre of k uniform-ball neighbours scores LDOF > c."""
    bound = false_detection_bound(k, d, c)
    if k < 3 or trials < 1:
        raise ParameterError(f"need k >= 3 and trials >= 1, got k={k}, trials={trials}")
    rng = make_rng(derive_seed(seed, "theorem2"))
    origin = np.zeros(d)
    exceed = 0
    for _ in range(trials):
        points = uniform_ball_points(rng, d, 1.0, k)
        d_bar = float(distances_to(metric, points, origin).mean())
        inner = float(pairwise_distances(metric, points).mean())
        if ldof_ratio(d_bar, inner) > c:
            exceed += 1
    report = Theorem2Report(d=d, k=k, c=c, trials=trials, seed=seed, exceedances=exceed, bound=bound)
    if report.violated:
        logger.warning(f"theorem 2 bound violated: d={d} k={k} c={c} frequency={report.frequency:.3g} "
                       f"> bound={bound:.3g} (seed={seed}, trials={trials})")
    return report


@dataclass(frozen=True)
class ScalingReport:
    sizes: Tuple[int, ...]
    seconds: Tuple[float, ...]

    @property
    def ratio(self) -> float:
        """Time growth from the smallest to the largest size."""
        return self.seconds[-1] / self.seconds[0] if self.seconds[0] > 0 else float("inf")

    @property
    def size_ratio(self) -> float:
        return self.sizes[-1] / self.sizes[0]


def scaling_benchmark(sizes: Sequence[int] = (10000, 40000), d: int = 2, k: int = 10, n: int = 10,
                      seed: int = 0, backend: Backend = Backend.TREE,
                      telemetry: Optional[TelemetryCollector] = None) -> ScalingReport:
    """Wall time of top-n LDOF on uniform data of increasing size."""
    telemetry = telemetry or TelemetryCollector()
    seconds = []
    for size in sizes:
        points = make_rng(derive_seed(seed, "bench", size)).random((int(size), d))
        data = Dataset(points, name=f"uniform-{size}")
        with telemetry.timed("bench.detect", size=str(size)):
            top_n_ldof(data, n, k, backend=backend)
        seconds.append(telemetry.latest("bench.detect"))
        logger.info(f"bench N={size}: {seconds[-1]:.3f}s")
    return ScalingReport(sizes=tuple(int(s) for s in sizes), seconds=tuple(seconds))
