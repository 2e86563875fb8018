"""LDOF Command Line
detect, gen, sweep, verify-theory and bench.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Optional, Union

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .analysis import datagen
from .analysis.evaluation import (
    SweepReport,
    TrialSpec,
    mix_outliers,
    mixing_protocol,
    precision,
    run_protocol,
    scaling_benchmark,
    subsample_protocol,
    sweep_k,
    verify_theorem1,
    verify_theorem2,
)
from .analysis.theory import TheoryBound
from .core.config import ConfigManager
from .core.dataset import Dataset
from .core.errors import EXIT_OK, EXIT_USAGE, DataError, InternalError, LdofError, ParameterError, exit_code_for
from .core.metric import DistanceMetric
from .core.scores import Method, Ranking
from .core.telemetry import TelemetryCollector
from .data.dataset_io import filter_by_label, load_csv, schema_for, write_dataset_csv, write_ranking_csv, write_report
from .detectors.baselines import top_n_knn, top_n_lof
from .detectors.ldof import suggest_k, top_n_ldof
from .detectors.neighbors import Backend, NeighborIndex, build_index

logger = logging.getLogger("ldof.cli")

app = typer.Typer(
    name="ldof",
    help="Local distance-based outlier detection: top-n LDOF, KNN and LOF.",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)
console = Console()
err_console = Console(stderr=True)


def _click_class(name: str) -> type:
    # typer raises either click's exceptions or its bundled copy of them
    return next(c for c in typer.BadParameter.__mro__ if c.__name__ == name)


ClickException = _click_class("ClickException")


def setup_logging(config: ConfigManager) -> None:
    level_name = str(config.get("logging.level", "INFO")).upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        raise ParameterError(f"unknown log level {level_name!r}")
    root = logging.getLogger("ldof")
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    rich_handler = RichHandler(console=Console(stderr=True), show_path=False)
    rich_handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(rich_handler)
    log_file = config.get("logging.file")
    if log_file:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(logging.Formatter(config.get("logging.format")))
        root.addHandler(file_handler)
    root.setLevel(level)


@contextmanager
def _errors() -> Iterator[None]:
    """Map toolkit errors to their exit codes."""
    try:
        yield
    except (typer.Exit, typer.Abort, ClickException):
        raise
    except LdofError as e:
        err_console.print(f"error: {e}", markup=False, highlight=False)
        raise typer.Exit(exit_code_for(e))
    except Exception as e:
        logger.exception("internal error")
        internal = InternalError(f"internal error: {e}")
        err_console.print(str(internal), markup=False, highlight=False)
        raise typer.Exit(exit_code_for(internal)) from e


def _seed(seed: Optional[int]) -> int:
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1)[0])
    console.print(f"seed: {seed}")
    return int(seed)


def _threads(config: ConfigManager, threads: Optional[int]) -> int:
    if threads is None:
        return config.threads()
    if threads < 1:
        raise ParameterError(f"--threads must be at least 1, got {threads}")
    return threads


def _load(path: Path, schema: str, delimiter: Optional[str], label_column: Optional[int],
          standardize: bool) -> Dataset:
    overrides: Dict[str, object] = {}
    if delimiter is not None:
        overrides["delimiter"] = delimiter
    if label_column is not None:
        overrides["label_column"] = label_column
    if standardize:
        overrides["standardize"] = True
    return load_csv(path, schema_for(schema, **overrides))


def _index(dataset: Dataset, metric: DistanceMetric, backend: Backend, config: ConfigManager,
           workers: int) -> NeighborIndex:
    return build_index(
        dataset, metric=metric, backend=backend,
        leafsize=int(config.get("neighbors.leafsize", 16)),
        brute_force_dim=int(config.get("neighbors.brute_force_dim", 16)),
        workers=workers,
    )


def _labels(value: str) -> Union[str, FrozenSet[str]]:
    """A comma-separated option names a set of labels."""
    parts = [v.strip() for v in value.split(",") if v.strip()]
    if not parts:
        raise ParameterError("empty label option")
    return parts[0] if len(parts) == 1 else frozenset(parts)


def _split(dataset: Dataset, normal_label: Optional[str], outlier_label: Optional[str]):
    if normal_label is None or outlier_label is None:
        raise ParameterError("this protocol needs both --normal-label and --outlier-label")
    return filter_by_label(dataset, _labels(normal_label)), filter_by_label(dataset, _labels(outlier_label))


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "-"
    return f"{value:.6g}"


def _print_ranking(ranking: Ranking, dataset: Dataset, seconds: Optional[float]) -> None:
    table = Table(title=f"top-{ranking.n} {ranking.method.value.upper()} (k={ranking.k}) on {dataset.name}")
    table.add_column("rank", justify="right")
    table.add_column("id", justify="right")
    if dataset.source_ids is not None:
        table.add_column("source id", justify="right")
    table.add_column("label")
    table.add_column("score", justify="right")
    if ranking.method is Method.LDOF:
        table.add_column("knn dist", justify="right")
        table.add_column("inner dist", justify="right")
    for rank, e in enumerate(ranking.entries, start=1):
        row = [str(rank), str(e.id)]
        if dataset.source_ids is not None:
            row.append(str(int(dataset.source_ids[e.id])))
        row.append(dataset.labels[e.id] or "-" if dataset.labels is not None else "-")
        row.append(_fmt(e.score))
        if ranking.method is Method.LDOF:
            row += [_fmt(e.knn_dist), _fmt(e.knn_inner_dist)]
        table.add_row(*row)
    console.print(table)
    if len(ranking) < ranking.n:
        console.print(f"{ranking.n - len(ranking)} slots empty: {len(ranking.pruned_ids)} records pruned "
                      f"below the lower bound")
    if seconds is not None:
        console.print(f"detection took {seconds:.3f}s")


@app.callback()
def _root(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", help="JSON configuration file."),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR."),
):
    with _errors():
        manager = ConfigManager(str(config) if config else None)
        if log_level:
            manager.set("logging.level", log_level.upper())
        setup_logging(manager)
    ctx.obj = manager


@app.command()
def detect(
    ctx: typer.Context,
    input_path: Path = typer.Argument(..., metavar="INPUT", help="Dataset CSV."),
    n: int = typer.Option(..., "--n", "-n", help="Number of outliers to report."),
    k: Optional[int] = typer.Option(None, "--k", "-k", help="Neighbourhood size [default: max(d+1, 10)]."),
    method: str = typer.Option("ldof", "--method", "-m", help="ldof, knn or lof."),
    metric: Optional[str] = typer.Option(None, "--metric", help="euclidean or squared_euclidean."),
    backend: Optional[str] = typer.Option(None, "--backend", help="tree or brute_force."),
    schema: str = typer.Option("dataset", "--schema", help="dataset, default, wdbc or shuttle."),
    delimiter: Optional[str] = typer.Option(None, "--delimiter", help="Field separator or 'whitespace'."),
    label_column: Optional[int] = typer.Option(None, "--label-column"),
    standardize: bool = typer.Option(False, "--standardize", help="Z-score every feature."),
    normal_label: Optional[str] = typer.Option(None, "--normal-label"),
    outlier_label: Optional[str] = typer.Option(None, "--outlier-label"),
    outlier_count: int = typer.Option(0, "--outlier-count", help="Mix in the first N outlier-label records."),
    no_prune: bool = typer.Option(False, "--no-prune", help="Keep records below the LDOF lower bound."),
    threads: Optional[int] = typer.Option(None, "--threads"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Ranking CSV."),
):
    """Rank the top-n outliers of a dataset."""
    config: ConfigManager = ctx.obj
    telemetry = TelemetryCollector()
    with _errors():
        m = Method.parse(method)
        dataset = _load(input_path, schema, delimiter, label_column, standardize)
        truth = None
        if outlier_count:
            normal, pool = _split(dataset, normal_label, outlier_label)
            dataset, truth = mix_outliers(normal, pool, outlier_count, mode="first")
        k_value = k if k is not None else suggest_k(dataset.dimension)
        metric_value = DistanceMetric.parse(metric or config.get("detection.metric"))
        backend_value = Backend.parse(backend or config.get("detection.backend"))
        index = _index(dataset, metric_value, backend_value, config, _threads(config, threads))
        with telemetry.timed("detect", method=m.value):
            if m is Method.LDOF:
                ranking = top_n_ldof(dataset, n, k_value, metric_value, prune=not no_prune, index=index)
            elif m is Method.KNN:
                ranking = top_n_knn(dataset, n, k_value, metric_value, index=index)
            else:
                ranking = top_n_lof(dataset, n, k_value, metric_value, index=index)
        path = config.output_path(str(output) if output else f"{dataset.name}_{m.value}_top{n}.csv")
        write_ranking_csv(ranking, path)
    _print_ranking(ranking, dataset, telemetry.latest("detect"))
    if truth:
        console.print(f"precision: {precision(ranking, truth):.3f}")
    console.print(f"ranking written to {path}")


def _scene(scene: Optional[Path], paper_scene: bool, seed: Optional[int]) -> datagen.SceneSpec:
    if paper_scene == (scene is not None):
        raise ParameterError("give either a scene file or --paper-scene")
    layout = datagen.paper_scene() if paper_scene else datagen.load_scene_spec(scene)
    if seed is not None:
        try:
            layout = datagen.SceneSpec.model_validate({**layout.model_dump(), "seed": seed})
        except ValidationError as e:
            raise ParameterError(f"invalid --seed: {e}") from e
    return layout


@app.command()
def gen(
    ctx: typer.Context,
    scene: Optional[Path] = typer.Argument(None, help="Scene JSON file."),
    paper_scene: bool = typer.Option(False, "--paper-scene", help="The default scattered 2-D scene."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Overrides the scene seed."),
    output: Path = typer.Option(Path("scene.csv"), "--output", "-o"),
):
    """Generate a seeded synthetic dataset."""
    config: ConfigManager = ctx.obj
    with _errors():
        layout = _scene(scene, paper_scene, seed)
        dataset = datagen.generate_scene(layout)
        path = write_dataset_csv(dataset, config.output_path(str(output)))
    console.print(f"seed: {layout.seed}")
    console.print(f"wrote {dataset.size} records ({len(layout.outliers)} outliers) to {path}")


def _print_report(report: SweepReport) -> None:
    frame = report.aggregate()
    methods = sorted(frame["method"].unique())
    table = Table(title=f"mean precision, n={report.metadata.get('n')}, runs={report.metadata.get('runs')}")
    table.add_column("k", justify="right")
    for m in methods:
        table.add_column(m, justify="right")
    pivot = frame.pivot(index="k", columns="method", values="mean")
    for k, row in pivot.iterrows():
        table.add_row(str(k), *["-" if np.isnan(row[m]) else f"{row[m]:.3f}" for m in methods])
    console.print(table)
    if report.metadata.get("pruning_violations"):
        console.print(f"[yellow]pruning violations: {report.metadata['pruning_violations']}[/yellow]")
    failed = sum(1 for c in report.cells if c.error)
    if failed:
        console.print(f"[yellow]{failed} cells failed; see the report for reasons[/yellow]")


@app.command()
def sweep(
    ctx: typer.Context,
    input_path: Optional[Path] = typer.Argument(None, metavar="[INPUT]", help="Dataset CSV."),
    paper_scene: bool = typer.Option(False, "--paper-scene", help="Sweep the default synthetic scene."),
    protocol: str = typer.Option("fixed", "--protocol", help="fixed, mix or subsample."),
    k_min: int = typer.Option(..., "--k-min"),
    k_max: int = typer.Option(..., "--k-max"),
    n: int = typer.Option(..., "--n", "-n"),
    methods: str = typer.Option("ldof,knn,lof", "--methods", help="Comma-separated methods."),
    runs: int = typer.Option(1, "--runs"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    truth_label: str = typer.Option(datagen.OUTLIER, "--truth-label", help="Label of the true outliers (fixed)."),
    normal_label: Optional[str] = typer.Option(None, "--normal-label", help="Label of normal records (mix, subsample)."),
    outlier_label: Optional[str] = typer.Option(None, "--outlier-label", help="Label(s) of outlier records (mix, subsample), comma-separated."),
    outlier_count: int = typer.Option(10, "--outlier-count", help="Outliers mixed in per run (mix)."),
    mode: str = typer.Option("random", "--mode", help="first or random outlier choice (mix)."),
    sample_size: int = typer.Option(1000, "--sample-size", help="Normal records sampled per run (subsample)."),
    schema: str = typer.Option("dataset", "--schema"),
    delimiter: Optional[str] = typer.Option(None, "--delimiter"),
    label_column: Optional[int] = typer.Option(None, "--label-column"),
    standardize: bool = typer.Option(False, "--standardize"),
    metric: Optional[str] = typer.Option(None, "--metric"),
    backend: Optional[str] = typer.Option(None, "--backend"),
    threads: Optional[int] = typer.Option(None, "--threads"),
    output: str = typer.Option("sweep", "--output", "-o", help="Report path prefix."),
):
    """Precision of each method over a k-range, averaged over runs."""
    config: ConfigManager = ctx.obj
    telemetry = TelemetryCollector()
    with _errors():
        run_seed = _seed(seed)
        trial = TrialSpec(
            k_min=k_min, k_max=k_max, n=n, runs=runs, seed=run_seed,
            methods=tuple(Method.parse(m) for m in methods.split(",") if m.strip()),
            metric=DistanceMetric.parse(metric or config.get("detection.metric")),
            backend=Backend.parse(backend or config.get("detection.backend")),
        )
        trial.validate()
        workers = _threads(config, threads)
        if paper_scene:
            if input_path is not None:
                raise ParameterError("give either an input file or --paper-scene")
            dataset = datagen.generate_scene(datagen.paper_scene())
        elif input_path is None:
            raise ParameterError("missing input file (or --paper-scene)")
        else:
            dataset = _load(input_path, schema, delimiter, label_column, standardize)
        if protocol == "fixed":
            truth = dataset.ids_with_label(truth_label)
            if not truth:
                raise DataError(f"no record of {dataset.name} is labelled {truth_label!r}")
            report = sweep_k(dataset, truth, trial, threads=workers, telemetry=telemetry)
        elif protocol == "mix":
            normal, pool = _split(dataset, normal_label, outlier_label)
            trial.outlier_count = outlier_count
            report = run_protocol(mixing_protocol(normal, pool, outlier_count, mode=mode), trial,
                                  threads=workers, name=f"{dataset.name}-mix{outlier_count}", telemetry=telemetry)
        elif protocol == "subsample":
            normal, outliers = _split(dataset, normal_label, outlier_label)
            trial.outlier_count = outliers.size
            report = run_protocol(subsample_protocol(normal, outliers, sample_size), trial,
                                  threads=workers, name=f"{dataset.name}-sample{sample_size}", telemetry=telemetry)
        else:
            raise ParameterError(f"unknown protocol {protocol!r} (expected fixed, mix or subsample)")
        paths = write_report(report, config.output_path(output))
    _print_report(report)
    timing = telemetry.snapshot().get("sweep.run")
    if timing:
        console.print(f"{timing['count']} runs took {timing['total']:.3f}s")
    console.print(f"report written to {paths['json']}")


@app.command("verify-theory")
def verify_theory(
    ctx: typer.Context,
    theorem: int = typer.Option(..., "--theorem", help="1 (lower bound) or 2 (false detection)."),
    d: int = typer.Option(2, "-d", "--dimension"),
    k: int = typer.Option(50, "-k", "--k"),
    c: float = typer.Option(1.0, "-c", "--c", help="LDOF threshold (theorem 2), must exceed 1/2."),
    samples: Optional[int] = typer.Option(None, "--samples", help="Ball sample size (theorem 1) [default: max(10k, 1000)]."),
    trials: Optional[int] = typer.Option(None, "--trials", help="[default: 50 for theorem 1, 1000 for theorem 2]"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    metric: str = typer.Option(DistanceMetric.SQUARED_EUCLIDEAN.value, "--metric"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write the report as JSON."),
):
    """Monte-Carlo check of the LDOF lower bound or the false-detection bound."""
    config: ConfigManager = ctx.obj
    table = Table(title=f"theorem {theorem}: d={d}, k={k}", show_header=False)
    with _errors():
        if theorem not in (1, 2):
            raise ParameterError(f"--theorem must be 1 or 2, got {theorem}")
        if theorem == 2:
            bound = TheoryBound.evaluate(k, d, c)
        trial_seed = _seed(seed)
        metric_value = DistanceMetric.parse(metric)
        if theorem == 1:
            report = verify_theorem1(
                d, k, samples or max(10 * k, 1000), trials or 50, trial_seed, metric=metric_value,
                tolerance=float(config.get("evaluation.theorem1_tolerance", 0.05)),
            )
            passed = report.passed
            document = {"theorem": 1, "d": d, "k": k, "samples": report.samples, "trials": report.trials,
                        "seed": trial_seed, "metric": metric_value.value, "mean": report.mean,
                        "std": report.std, "expected": report.expected, "tolerance": report.tolerance,
                        "passed": passed}
            table.add_row("mean LDOF", f"{report.mean:.4f}")
            table.add_row("std", f"{report.std:.4f}")
            table.add_row("expected", f"{report.expected:g}")
            table.add_row("tolerance", f"{report.tolerance:g}")
        else:
            report = verify_theorem2(d, k, c, trials or 1000, trial_seed, metric=metric_value)
            passed = not report.violated
            document = {"theorem": 2, "d": d, "k": k, "c": c, "trials": report.trials,
                        "seed": trial_seed, "metric": metric_value.value,
                        "exceedances": report.exceedances, "frequency": report.frequency,
                        "alpha": bound.alpha, "bound": report.bound, "passed": passed}
            table.add_row("exceedances", f"{report.exceedances}/{report.trials}")
            table.add_row("frequency", f"{report.frequency:.4g}")
            table.add_row("alpha", f"{bound.alpha:.4g}")
            table.add_row("bound", f"{report.bound:.4g}")
        if output:
            path = config.output_path(str(output))
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(document, indent=2), encoding="utf-8")
    console.print(table)
    console.print("PASS" if passed else "FLAG")


@app.command()
def bench(
    ctx: typer.Context,
    sizes: str = typer.Option("10000,40000", "--sizes", help="Comma-separated dataset sizes."),
    d: int = typer.Option(2, "-d", "--dimension"),
    k: int = typer.Option(10, "-k", "--k"),
    n: int = typer.Option(10, "--n", "-n"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    backend: Optional[str] = typer.Option(None, "--backend"),
):
    """Time top-n LDOF on uniform data of growing size."""
    config: ConfigManager = ctx.obj
    with _errors():
        try:
            size_list = [int(s) for s in sizes.split(",") if s.strip()]
        except ValueError:
            raise ParameterError(f"--sizes must be comma-separated integers, got {sizes!r}") from None
        if not size_list or min(size_list) <= k:
            raise ParameterError(f"every size must exceed k={k}")
        report = scaling_benchmark(
            sizes=size_list, d=d, k=k, n=n, seed=_seed(seed),
            backend=Backend.parse(backend or config.get("detection.backend")),
        )
    table = Table(title=f"top-{n} LDOF, d={d}, k={k}")
    table.add_column("N", justify="right")
    table.add_column("seconds", justify="right")
    for size, seconds in zip(report.sizes, report.seconds):
        table.add_row(str(size), f"{seconds:.3f}")
    console.print(table)
    if len(report.sizes) > 1:
        console.print(f"time ratio {report.ratio:.2f} for a size ratio of {report.size_ratio:.2f}")


def main(argv: Optional[List[str]] = None) -> int:
    try:
        result = app(args=argv, prog_name="ldof", standalone_mode=False)
    except ClickException as e:
        e.show()
        return EXIT_USAGE
    except typer.Abort:
        err_console.print("aborted")
        return exit_code_for(InternalError("aborted"))
    return result if isinstance(result, int) else EXIT_OK
