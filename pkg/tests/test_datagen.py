import json

import numpy as np
import pytest

from src.analysis.datagen import (
    NORMAL,
    OUTLIER,
    ClusterSpec,
    SceneSpec,
    generate_scene,
    load_scene_spec,
    paper_scene,
    radial_uniformity_test,
    sample_uniform_ball,
)
from src.analysis.theory import uniform_ball_mean_square
from src.core.errors import DataFormatError, ParameterError, SceneError


class TestScene:
    def test_paper_scene_layout(self, scene):
        assert scene.size == 214
        assert scene.dimension == 2
        assert scene.labels.count(OUTLIER) == 4
        assert scene.ids_with_label(OUTLIER) == frozenset({210, 211, 212, 213})
        assert scene.features[210:].tolist() == paper_scene().outliers
        assert scene.metadata["seed"] == 2009

    def test_same_seed_same_data(self):
        assert generate_scene(paper_scene(7)) == generate_scene(paper_scene(7))
        assert generate_scene(paper_scene(7)) != generate_scene(paper_scene(8))

    def test_single_cluster_without_outliers(self):
        layout = SceneSpec(dimension=3, clusters=[ClusterSpec(center=[1, 2, 3], count=20, spread=0.5)], seed=1)
        data = generate_scene(layout)
        assert data.size == 20
        assert set(data.labels) == {NORMAL}

    def test_clusters_keep_their_order(self):
        layout = SceneSpec(dimension=1, seed=3, clusters=[
            ClusterSpec(center=[0.0], count=30, spread=0.1),
            ClusterSpec(center=[100.0], count=30, spread=0.1),
        ])
        data = generate_scene(layout)
        assert data.features[:30].max() < 50 < data.features[30:].min()

    def test_outlier_too_close(self):
        layout = SceneSpec(dimension=2, seed=1,
                           clusters=[ClusterSpec(center=[0, 0], count=5, spread=1.0)],
                           outliers=[[20.0, 0.0], [3.0, 4.0]])
        with pytest.raises(SceneError, match="outlier 1 .* cluster 0"):
            generate_scene(layout)

    def test_dimension_mismatch_is_rejected(self):
        with pytest.raises(ValueError):
            SceneSpec(dimension=2, clusters=[ClusterSpec(center=[0], count=1, spread=1.0)])

    def test_invalid_cluster(self):
        with pytest.raises(ValueError):
            ClusterSpec(center=[0.0], count=0, spread=1.0)
        with pytest.raises(ValueError):
            ClusterSpec(center=[0.0], count=1, spread=0.0)


class TestSceneFiles:
    def test_load(self, tmp_path):
        path = tmp_path / "scene.json"
        path.write_text(json.dumps(paper_scene(11).model_dump()), encoding="utf-8")
        assert load_scene_spec(path) == paper_scene(11)

    def test_malformed_json_reports_the_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "dimension": 2,\n  "clusters": [\n}\n', encoding="utf-8")
        with pytest.raises(DataFormatError) as info:
            load_scene_spec(path)
        assert info.value.line == 4

    def test_invalid_scene(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"dimension": 2, "clusters": [{"center": [0], "count": 3, "spread": 1}]}))
        with pytest.raises(SceneError):
            load_scene_spec(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_scene_spec(tmp_path / "absent.json")


class TestUniformBall:
    def test_support(self):
        data = sample_uniform_ball(4, 2.5, 5000, seed=1)
        assert np.linalg.norm(data.features, axis=1).max() <= 2.5

    def test_one_dimensional_mean(self):
        data = sample_uniform_ball(1, 1.0, 10_000, seed=2)
        assert abs(data.features.mean()) < 0.02

    def test_mean_square_length(self):
        data = sample_uniform_ball(3, 1.0, 100_000, seed=3)
        mean_square = np.square(data.features).sum(axis=1).mean()
        assert mean_square == pytest.approx(uniform_ball_mean_square(3, 1.0), abs=0.01)

    @pytest.mark.parametrize("d", [1, 2, 5])
    def test_radial_law(self, d):
        data = sample_uniform_ball(d, 1.0, 10_000, seed=40 + d)
        _, p_value = radial_uniformity_test(data.features, 1.0)
        assert p_value > 0.01

    def test_shell_fails_the_radial_test(self, rng):
        directions = rng.normal(size=(10_000, 2))
        shell = directions / np.linalg.norm(directions, axis=1, keepdims=True)
        _, p_value = radial_uniformity_test(shell * 0.99, 1.0)
        assert p_value < 1e-6

    def test_seeded(self):
        assert sample_uniform_ball(2, 1.0, 50, seed=9) == sample_uniform_ball(2, 1.0, 50, seed=9)

    def test_count_must_be_positive(self):
        with pytest.raises(ParameterError):
            sample_uniform_ball(2, 1.0, 0, seed=1)
