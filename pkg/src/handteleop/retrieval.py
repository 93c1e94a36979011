"""KNN episode retrieval over first-frame features.

An index holds one unit-normalized feature vector per recorded episode.
A query takes the n nearest neighbors (L2 in the normalized space, so the
ordering is cosine-equivalent), majority-votes on the task label, and
returns the nearest episode within the winning label. Label-count ties go
to the label that owns the overall nearest neighbor.

Feature extraction is pluggable; the built-in embedder bilinearly
downsamples a scene-summary grid to 8x8 and unit-normalizes, so retrieval
is deterministic and dependency-free. Real image embedders can be swapped
in through the feature-file interface.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadN,
    DimensionMismatch,
    DuplicateId,
    EmptyInput,
    EpisodeMissing,
    MalformedLine,
)

DEFAULT_N = 5
EMBED_GRID = 8  # built-in embedder output is an 8x8 grid, 64-dim


@dataclass(frozen=True)
class FeatureVector:
    episode_id: str
    task_label: str
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1 or not np.all(np.isfinite(self.values)):
            raise DimensionMismatch("feature values must be a finite 1-D vector")


def _normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


class KnnIndex:
    """Immutable brute-force index over unit-normalized vectors."""

    def __init__(self, features: list[FeatureVector]):
        if not features:
            raise EmptyInput("cannot build an index from zero features")
        dims = {f.values.shape[0] for f in features}
        if len(dims) != 1:
            raise DimensionMismatch(f"mixed feature dimensions {sorted(dims)}")
        ids = [f.episode_id for f in features]
        dupes = [i for i, c in Counter(ids).items() if c > 1]
        if dupes:
            raise DuplicateId(f"duplicate episode ids {dupes}")
        # Sort by id so results are independent of insertion order.
        feats = sorted(features, key=lambda f: f.episode_id)
        self.dimension = dims.pop()
        self.ids = [f.episode_id for f in feats]
        self.labels = [f.task_label for f in feats]
        self.matrix = np.stack([_normalize(f.values) for f in feats])

    def __len__(self):
        return len(self.ids)


def index_build(features: list[FeatureVector]) -> KnnIndex:
    return KnnIndex(features)


@dataclass(frozen=True)
class KnnResult:
    chosen_episode_id: str
    chosen_task_label: str
    neighbors: list  # [(episode_id, distance)], ascending


def knn_query(index: KnnIndex, q: FeatureVector | np.ndarray, n: int) -> KnnResult:
    if not (1 <= n <= len(index)):
        raise BadN(f"n must be in [1, {len(index)}], got {n}")
    values = q.values if isinstance(q, FeatureVector) else np.asarray(q, dtype=float)
    if values.shape != (index.dimension,):
        raise DimensionMismatch(
            f"query dimension {values.shape} != index dimension {index.dimension}"
        )
    qn = _normalize(values)
    dists = np.linalg.norm(index.matrix - qn, axis=1)
    order = sorted(range(len(index)), key=lambda i: (dists[i], index.ids[i]))
    top = order[:n]
    neighbors = [(index.ids[i], float(dists[i])) for i in top]
    counts = Counter(index.labels[i] for i in top)
    best = max(counts.values())
    tied = {label for label, c in counts.items() if c == best}
    if len(tied) == 1:
        winner = tied.pop()
    else:
        # Tie rule: the label owning the overall nearest neighbor wins.
        winner = next(index.labels[i] for i in top if index.labels[i] in tied)
    chosen = next(i for i in top if index.labels[i] == winner)
    return KnnResult(
        chosen_episode_id=index.ids[chosen],
        chosen_task_label=winner,
        neighbors=neighbors,
    )


# ---------------------------------------------------------------------------
# Built-in embedder
# ---------------------------------------------------------------------------

def bilinear_downsample(grid: np.ndarray, size: int = EMBED_GRID) -> np.ndarray:
    """Bilinear resample of a 2-D grid to size x size."""
    grid = np.asarray(grid, dtype=float)
    h, w = grid.shape
    if h % size == 0 and w % size == 0:
        # area average so every source cell contributes
        return grid.reshape(size, h // size, size, w // size).mean(axis=(1, 3))
    ys = np.linspace(0, h - 1, size)
    xs = np.linspace(0, w - 1, size)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    g = grid
    out = (
        g[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
        + g[np.ix_(y1, x0)] * fy * (1 - fx)
        + g[np.ix_(y0, x1)] * (1 - fy) * fx
        + g[np.ix_(y1, x1)] * fy * fx
    )
    return out


def scene_from_first_frame(hand_keypoints, robot_position, robot_gripper,
                           resolution: int = 32, extent: float = 1.0) -> np.ndarray:
    """Rasterize a first frame into a coarse scene-summary grid.

    Hand keypoints and the robot end-effector are splatted into an
    x/y occupancy grid over [-extent, extent]^2; heights and the gripper
    value modulate intensity so distinct scenes separate.
    """
    grid = np.zeros((resolution, resolution))

    def splat(p, weight):
        # bilinear distribution so sub-cell motion changes the grid smoothly
        u = np.clip((p[0] + extent) / (2 * extent) * (resolution - 1),
                    0.0, resolution - 1)
        v = np.clip((p[1] + extent) / (2 * extent) * (resolution - 1),
                    0.0, resolution - 1)
        i0, j0 = int(v), int(u)
        i1, j1 = min(i0 + 1, resolution - 1), min(j0 + 1, resolution - 1)
        fv, fu = v - i0, u - j0
        grid[i0, j0] += weight * (1 - fv) * (1 - fu)
        grid[i0, j1] += weight * (1 - fv) * fu
        grid[i1, j0] += weight * fv * (1 - fu)
        grid[i1, j1] += weight * fv * fu

    for p in np.asarray(hand_keypoints, dtype=float):
        splat(p, 1.0 + p[2])
    splat(np.asarray(robot_position, dtype=float), 5.0 + float(robot_gripper))
    return grid


def embed_scene(grid: np.ndarray) -> np.ndarray:
    """Downsample-and-normalize embedding of a scene-summary grid."""
    flat = bilinear_downsample(grid).ravel()
    return _normalize(flat)


def embed_first_frame(record) -> np.ndarray:
    """Built-in embedding of an episode's first record."""
    grid = scene_from_first_frame(
        record.hand_keypoints, record.robot_position, record.robot_gripper
    )
    return embed_scene(grid)


# ---------------------------------------------------------------------------
# Feature file I/O: newline-delimited JSON {episode_id, task_label, values[]}
# ---------------------------------------------------------------------------

def write_features(features: list[FeatureVector], path) -> None:
    lines = []
    for f in features:
        lines.append(json.dumps({
            "episode_id": f.episode_id,
            "task_label": f.task_label,
            "values": f.values.tolist(),
        }))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_features(path) -> list[FeatureVector]:
    features = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
            features.append(FeatureVector(
                episode_id=obj["episode_id"],
                task_label=obj["task_label"],
                values=np.asarray(obj["values"], dtype=float),
            ))
        except (json.JSONDecodeError, KeyError) as exc:
            raise MalformedLine(lineno, str(exc)) from exc
    return features


def condition_lookup(scene_grid: np.ndarray, index: KnnIndex, corpus_dir,
                     n: int = DEFAULT_N) -> tuple[str, Path, KnnResult]:
    """Resolve the chosen episode id for a scene to its file on disk."""
    result = knn_query(index, embed_scene(scene_grid), n)
    path = Path(corpus_dir) / f"{result.chosen_episode_id}.h2r.jsonl"
    if not path.exists():
        raise EpisodeMissing(str(path))
    return result.chosen_episode_id, path, result
