"""LDOF Synthetic Data
Seeded scenes of Gaussian mini-clusters with planted outliers, and
uniform d-ball samples for the Monte-Carlo theorem checks.

Randomness comes from numpy's PCG64 bit generator, whose stream is
stable across platforms for a given seed and numpy release.
"""
import json
import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from scipy import stats

from ..core.dataset import Dataset
from ..core.errors import DataFormatError, ParameterError, SceneError

logger = logging.getLogger("ldof.datagen")

NORMAL = "normal"
OUTLIER = "outlier"
SEPARATION = 6.0
PAPER_SCENE_SEED = 2009


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


class ClusterSpec(BaseModel):
    center: List[float]
    count: int = Field(ge=1)
    spread: float = Field(gt=0)


class SceneSpec(BaseModel):
    dimension: int = Field(ge=1)
    clusters: List[ClusterSpec]
    outliers: List[List[float]] = Field(default_factory=list)
    seed: int = PAPER_SCENE_SEED
    name: str = "scene"

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, v: int) -> int:
        if not 0 <= v < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return v

    @model_validator(mode="after")
    def _dimensions(self) -> "SceneSpec":
        for i, c in enumerate(self.clusters):
            if len(c.center) != self.dimension:
                raise ValueError(f"cluster {i} center has {len(c.center)} coordinates, "
                                 f"expected {self.dimension}")
        for j, o in enumerate(self.outliers):
            if len(o) != self.dimension:
                raise ValueError(f"outlier {j} has {len(o)} coordinates, expected {self.dimension}")
        return self


def paper_scene(seed: int = PAPER_SCENE_SEED) -> SceneSpec:
    """Scattered 2-D scene: a well-shaped cluster C1, a mini-cluster C2,
    an isolated 10-point mini-cluster C3, and four planted outliers each
    sitting off one side of C1 or C2."""
    return SceneSpec(
        dimension=2,
        name="paper-scene",
        seed=seed,
        clusters=[
            ClusterSpec(center=[0.0, 0.0], count=150, spread=1.0),
            ClusterSpec(center=[12.0, 0.0], count=50, spread=0.8),
            ClusterSpec(center=[6.0, 30.0], count=10, spread=0.5),
        ],
        outliers=[[-7.0, 0.0], [0.0, -7.0], [19.0, 0.0], [12.0, -7.0]],
    )


def load_scene_spec(path: Union[str, Path]) -> SceneSpec:
    p = Path(path)
    try:
        return SceneSpec.model_validate(json.loads(p.read_text(encoding="utf-8")))
    except FileNotFoundError as e:
        raise DataFormatError("scene file not found", path=str(p)) from e
    except json.JSONDecodeError as e:
        raise DataFormatError(f"malformed JSON: {e.msg}", path=str(p), line=e.lineno) from e
    except ValidationError as e:
        raise SceneError(f"{p}: invalid scene: {e}") from e


def check_separation(scene: SceneSpec) -> None:
    if not scene.clusters or not scene.outliers:
        return
    limit = SEPARATION * max(c.spread for c in scene.clusters)
    for j, o in enumerate(scene.outliers):
        for i, c in enumerate(scene.clusters):
            gap = float(np.linalg.norm(np.subtract(o, c.center)))
            if gap <= limit:
                raise SceneError(
                    f"outlier {j} at {o} lies {gap:.3f} from cluster {i} center {c.center}; "
                    f"planted outliers must be farther than {limit:.3f}")


def generate_scene(scene: SceneSpec) -> Dataset:
    """Clusters in the given order, then the outliers; labels normal/outlier."""
    check_separation(scene)
    rng = make_rng(scene.seed)
    blocks = []
    labels: List[str] = []
    for c in scene.clusters:
        blocks.append(rng.normal(loc=c.center, scale=c.spread, size=(c.count, scene.dimension)))
        labels.extend([NORMAL] * c.count)
    if scene.outliers:
        blocks.append(np.asarray(scene.outliers, dtype=np.float64))
        labels.extend([OUTLIER] * len(scene.outliers))
    if not blocks:
        raise SceneError(f"scene {scene.name} has no clusters and no outliers")
    dataset = Dataset(
        np.vstack(blocks), labels=tuple(labels), name=scene.name,
        metadata={"seed": scene.seed, "generator": f"PCG64/numpy-{np.__version__}"},
    )
    logger.info(f"Generated {scene.name}: {dataset.size} records, {len(scene.outliers)} outliers")
    return dataset


def uniform_ball_points(rng: np.random.Generator, d: int, r: float, count: int) -> np.ndarray:
    """Uniform in the d-ball: isotropic direction times radius r * U^(1/d)."""
    directions = rng.normal(size=(count, d))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    # an all-zero draw stays at the origin
    norms[norms == 0] = 1.0
    radii = r * rng.random(count) ** (1.0 / d)
    return directions / norms * radii[:, np.newaxis]


def sample_uniform_ball(d: int, r: float, count: int, seed: int) -> Dataset:
    if int(count) < 1:
        raise ParameterError(f"count must be at least 1, got {count}")
    if int(d) < 1 or r < 0:
        raise ParameterError(f"need d >= 1 and r >= 0, got d={d}, r={r}")
    points = uniform_ball_points(make_rng(seed), int(d), float(r), int(count))
    return Dataset(points, name=f"ball-d{d}", metadata={"seed": seed, "radius": r})


def radial_uniformity_test(points: np.ndarray, r: float, bins: int = 20) -> Tuple[float, float]:
    """Chi-square test of (|x|/r)^d against U(0,1); returns (statistic, p-value)."""
    d = points.shape[1]
    u = (np.linalg.norm(points, axis=1) / r) ** d
    observed, _ = np.histogram(u, bins=bins, range=(0.0, 1.0))
    expected = np.full(bins, len(u) / bins)
    result = stats.chisquare(observed, expected)
    return float(result.statistic), float(result.pvalue)
