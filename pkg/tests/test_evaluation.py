import json
import math

import numpy as np
import pytest

from src.analysis.evaluation import (
    TrialSpec,
    derive_seed,
    mix_outliers,
    mixing_protocol,
    paired_t_test,
    precision,
    run_protocol,
    scaling_benchmark,
    subsample_normals,
    subsample_protocol,
    sweep_k,
    verify_theorem1,
    verify_theorem2,
)
from src.analysis.theory import false_detection_bound
from src.core.dataset import Dataset
from src.core.errors import DataError, ParameterError
from src.core.scores import Method, OutlierScore, Ranking
from src.core.telemetry import TelemetryCollector


def ranking_of(ids, n):
    entries = tuple(OutlierScore(id=i, score=float(len(ids) - r)) for r, i in enumerate(ids))
    return Ranking(method=Method.LDOF, n=n, k=5, entries=entries)


@pytest.fixture(scope="module")
def scene_report(scene):
    trial = TrialSpec(k_min=2, k_max=50, n=4, seed=1)
    return sweep_k(scene, scene.ids_with_label("outlier"), trial)


class TestPrecision:
    def test_perfect_and_total_miss(self):
        assert precision(ranking_of([3, 1, 2, 0], 4), {0, 1, 2, 3}) == 1.0
        assert precision(ranking_of([4, 5, 6, 7], 4), {0, 1, 2, 3}) == 0.0

    def test_eight_of_ten(self):
        assert precision(ranking_of(list(range(8)) + [20, 21], 10), set(range(10))) == 0.8

    def test_short_ranking_counts_misses(self):
        assert precision(ranking_of([0, 1], 4), {0, 1, 2, 3}) == 0.5

    def test_order_within_top_n_is_irrelevant(self):
        truth = {1, 5}
        assert precision(ranking_of([1, 2, 5, 9], 4), truth) == precision(ranking_of([9, 5, 2, 1], 4), truth)

    def test_empty_truth(self):
        with pytest.raises(DataError):
            precision(ranking_of([0], 1), set())


class TestSeeds:
    def test_stable_and_distinct(self):
        assert derive_seed(5, Method.LDOF, 10, 0) == derive_seed(5, "ldof", 10, 0)
        seeds = {derive_seed(5, m, k, r) for m in Method for k in range(2, 12) for r in range(3)}
        assert len(seeds) == 3 * 10 * 3

    def test_base_seed_matters(self):
        assert derive_seed(1, "run", 0) != derive_seed(2, "run", 0)


class TestProtocols:
    @pytest.fixture
    def normal(self, rng):
        return Dataset(rng.normal(size=(40, 2)), labels=("B",) * 40, name="normal")

    @pytest.fixture
    def pool(self, rng):
        return Dataset(rng.normal(loc=9.0, size=(12, 2)), labels=("M",) * 12, name="pool")

    def test_mix_first(self, normal, pool):
        mixed, truth = mix_outliers(normal, pool, 5, mode="first")
        assert mixed.size == 45
        assert truth == frozenset(range(40, 45))
        np.testing.assert_array_equal(mixed.features[40:], pool.features[:5])
        assert mixed.labels[40:] == ("M",) * 5

    def test_mix_nothing(self, normal, pool):
        mixed, truth = mix_outliers(normal, pool, 0)
        assert mixed is normal and truth == frozenset()

    def test_mix_random_depends_on_seed(self, normal, pool):
        a, truth_a = mix_outliers(normal, pool, 4, mode="random", seed=1)
        b, truth_b = mix_outliers(normal, pool, 4, mode="random", seed=2)
        assert len(truth_a) == len(truth_b) == 4
        assert a.metadata["outlier_source_ids"] != b.metadata["outlier_source_ids"]
        again, _ = mix_outliers(normal, pool, 4, mode="random", seed=1)
        assert again == a

    def test_mix_too_many(self, normal, pool):
        with pytest.raises(DataError):
            mix_outliers(normal, pool, 13)
        with pytest.raises(ParameterError):
            mix_outliers(normal, pool, 2, mode="last")

    def test_subsample(self, normal):
        sample = subsample_normals(normal, 10, seed=4)
        assert sample.size == 10
        assert sample == subsample_normals(normal, 10, seed=4)
        assert len(set(sample.source_ids.tolist())) == 10
        with pytest.raises(DataError):
            subsample_normals(normal, 41, seed=4)

    def test_subsample_protocol(self, normal, pool):
        make_run = subsample_protocol(normal, pool, 20)
        data, truth = make_run(0, 99)
        assert data.size == 32
        assert truth == frozenset(range(20, 32))


class TestTrialSpec:
    def test_empty_range(self):
        with pytest.raises(ParameterError, match="empty"):
            TrialSpec(k_min=10, k_max=9, n=3).validate()

    def test_range_must_fit_the_data(self):
        with pytest.raises(ParameterError):
            TrialSpec(k_min=2, k_max=20, n=3).validate(size=20)
        TrialSpec(k_min=2, k_max=19, n=3).validate(size=20)

    def test_k_min_at_least_two(self):
        with pytest.raises(ParameterError):
            TrialSpec(k_min=1, k_max=5, n=3).validate()


class TestSceneSweep:
    def test_ldof_plateau(self, scene_report):
        for k in range(20, 51):
            assert scene_report.cell_value(Method.LDOF, k) == 1.0, f"k={k}"

    def test_knn_collapses_past_the_mini_cluster(self, scene_report):
        for k in range(11, 51):
            assert scene_report.cell_value(Method.KNN, k) == 0.0, f"k={k}"

    def test_lof_loses_the_outliers_to_the_mini_cluster(self, scene_report):
        assert any(scene_report.cell_value(Method.LOF, k) == 0.0 for k in range(13, 21))

    def test_ldof_beats_the_baselines_on_the_plateau(self, scene_report):
        ldof, _ = scene_report.pooled(Method.LDOF, 20, 50)
        assert ldof > scene_report.pooled(Method.KNN, 20, 50)[0]
        assert ldof > scene_report.pooled(Method.LOF, 20, 50)[0]

    def test_aggregate_bounds(self, scene_report):
        frame = scene_report.aggregate()
        assert len(frame) == 3 * 49
        assert frame["mean"].between(0, 1).all()
        assert (frame["std"] <= 0.5).all()
        assert (frame["missing"] == 0).all()

    def test_no_pruning_faults(self, scene_report):
        assert scene_report.metadata["pruning_violations"] == 0

    def test_single_method_matches_full_sweep(self, scene, scene_report):
        trial = TrialSpec(k_min=2, k_max=50, n=4, seed=1, methods=(Method.LOF,))
        alone = sweep_k(scene, scene.ids_with_label("outlier"), trial)
        for k in range(2, 51):
            assert alone.cell_value(Method.LOF, k) == scene_report.cell_value(Method.LOF, k)

    def test_report_serializes(self, scene_report):
        document = json.loads(json.dumps(scene_report.to_dict()))
        assert document["metadata"]["k_range"] == [2, 50]
        assert len(document["cells"]) == 3 * 49
        assert len(document["runs"]["ldof"]["0"]) == 49


class TestRunProtocol:
    @pytest.fixture
    def factory(self, rng):
        normal = Dataset(rng.normal(size=(60, 2)), labels=("n",) * 60, name="normal")
        pool = Dataset(rng.normal(loc=6.0, scale=3.0, size=(20, 2)), labels=("o",) * 20, name="pool")
        return mixing_protocol(normal, pool, 3, mode="random")

    def test_repeatable(self, factory):
        trial = TrialSpec(k_min=3, k_max=8, n=3, runs=3, seed=42)
        first = run_protocol(factory, trial)
        second = run_protocol(factory, trial)
        assert first.to_frame().equals(second.to_frame())
        assert [c.ranked_ids for c in first.cells] == [c.ranked_ids for c in second.cells]

    def test_parallel_matches_serial(self, factory):
        trial = TrialSpec(k_min=3, k_max=8, n=3, runs=4, seed=7)
        serial = run_protocol(factory, trial, threads=1)
        parallel = run_protocol(factory, trial, threads=4)
        assert serial.to_frame().equals(parallel.to_frame())

    def test_runs_draw_different_outliers(self, factory):
        trial = TrialSpec(k_min=3, k_max=3, n=3, runs=2, seed=7, methods=(Method.KNN,))
        report = run_protocol(factory, trial)
        assert report.cells[0].seed != report.cells[1].seed

    def test_failed_run_becomes_missing_cells(self, factory):
        def flaky(run, seed):
            if run == 1:
                raise DataError("unreadable sample")
            return factory(run, seed)

        trial = TrialSpec(k_min=3, k_max=5, n=3, runs=2, seed=3)
        telemetry = TelemetryCollector()
        report = run_protocol(flaky, trial, threads=2, telemetry=telemetry)
        failed = [c for c in report.cells if c.run == 1]
        assert len(failed) == 3 * 3
        assert all(c.precision is None and c.failure_type == "data" for c in failed)
        assert all("unreadable" in c.error for c in failed)
        frame = report.aggregate()
        assert (frame["missing"] == 1).all() and (frame["runs"] == 1).all()
        assert telemetry.latest("sweep.cells") == 18
        assert telemetry.latest("sweep.failed_cells") == 9
        assert telemetry.snapshot()["sweep.run"]["count"] == 2

    def test_vectors_for_paired_tests(self, factory):
        trial = TrialSpec(k_min=3, k_max=6, n=3, runs=3, seed=5)
        report = run_protocol(factory, trial)
        vectors = report.run_vectors(Method.LDOF)
        assert sorted(vectors) == [0, 1, 2]
        assert all(len(v) == 4 for v in vectors.values())
        assert report.precision_vector(Method.KNN).shape == (4,)


def test_paired_t_test():
    t, p = paired_t_test([1, 2, 3, 4], [0, 1, 2, 4])
    assert t == pytest.approx(3.0)
    assert 0.0 < p < 0.1
    with pytest.raises(ParameterError):
        paired_t_test([1, 2], [1, 2, 3])


class TestTheorems:
    @pytest.mark.parametrize("d", [1, 3, 10])
    def test_theorem1_mean_near_one_half(self, d):
        report = verify_theorem1(d, 100, 5000, 50, seed=8)
        assert 0.45 <= report.mean <= 0.55
        assert report.passed

    def test_theorem1_degenerate_case(self):
        report = verify_theorem1(2, 2, 3, 3, seed=1)
        assert all(math.isfinite(v) for v in report.values)

    def test_theorem1_needs_enough_samples(self):
        with pytest.raises(ParameterError):
            verify_theorem1(2, 10, 5, 1, seed=1)

    @pytest.mark.slow
    def test_theorem2_frequency_within_bound(self):
        report = verify_theorem2(5, 60, 1.0, 10_000, seed=6)
        assert report.bound == false_detection_bound(60, 5, 1.0)
        assert not report.violated

    def test_theorem2_extreme_threshold(self):
        report = verify_theorem2(3, 10, 3.0, 2000, seed=2)
        assert report.exceedances == 0

    def test_theorem2_threshold_check(self):
        with pytest.raises(ParameterError, match="degenerates"):
            verify_theorem2(3, 10, 0.4, 10, seed=1)


def test_scaling_benchmark_records_timings():
    telemetry = TelemetryCollector()
    report = scaling_benchmark(sizes=(300, 600), k=5, n=3, seed=1, telemetry=telemetry)
    assert report.sizes == (300, 600)
    assert len(report.seconds) == 2 and all(s > 0 for s in report.seconds)
    assert telemetry.snapshot()["bench.detect"]["count"] == 2
    assert report.size_ratio == 2.0


@pytest.mark.slow
def test_scaling_is_near_linearithmic():
    report = scaling_benchmark(sizes=(10_000, 40_000), seed=3)
    assert report.ratio < 8.0
