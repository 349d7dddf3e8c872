"""Online Kohonen self-organizing map over traffic feature vectors.

Every map unit is a cluster. Gaussian neighbourhood over lattice distance,
truncated at the current radius; learning rate and radius both decay
exponentially per epoch.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Hashable, NamedTuple, Optional, Sequence

import numpy as np

from .features import FeatureScaler

GRID_SCHEMA_VERSION = 1


class SomError(ValueError):
    pass


@dataclass(frozen=True)
class SomConfig:
    rows: int = 8
    cols: int = 8
    epochs: int = 50
    initial_learning_rate: float = 0.3
    initial_radius: Optional[float] = None  # None -> max(rows, cols) / 2
    seed: int = 0

    def __post_init__(self):
        for name in ("rows", "cols", "epochs"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise SomError(f"{name} must be a positive integer")
        if self.rows * self.cols < 2:
            raise SomError("grid needs at least two units")
        if not 0 < self.initial_learning_rate <= 1:
            raise SomError("initial_learning_rate must be in (0, 1]")
        if self.initial_radius is not None and not 0 <= self.initial_radius <= max(self.rows, self.cols):
            raise SomError("initial_radius must be in [0, max(rows, cols)]")

    @property
    def radius(self) -> float:
        if self.initial_radius is None:
            return max(self.rows, self.cols) / 2
        return float(self.initial_radius)

    @property
    def time_constant(self) -> float:
        # radius reaches ~1 by the last epoch when it starts above 1
        return self.epochs / max(1.0, math.log(self.radius)) if self.radius > 0 else float(self.epochs)


@dataclass
class SomGrid:
    weights: np.ndarray  # (rows, cols, dim)
    config: SomConfig
    trained: bool = False
    scaler: Optional[FeatureScaler] = field(default=None, repr=False)

    def __post_init__(self):
        if self.weights.ndim != 3 or self.weights.shape[:2] != (self.config.rows, self.config.cols):
            raise SomError("weights shape does not match config")
        if not np.all(np.isfinite(self.weights)):
            raise SomError("non-finite unit weights")

    @property
    def dim(self) -> int:
        return self.weights.shape[2]

    @property
    def units(self) -> int:
        return self.config.rows * self.config.cols

    def flat(self) -> np.ndarray:
        return self.weights.reshape(self.units, self.dim)

    def copy(self) -> "SomGrid":
        return SomGrid(self.weights.copy(), self.config, self.trained, self.scaler)


class ClusterAssignment(NamedTuple):
    record_id: Hashable
    unit: tuple[int, int]
    distance: float


def init_grid(cfg: SomConfig, dim: int) -> SomGrid:
    if not isinstance(dim, int) or dim < 1:
        raise SomError("dim must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    return SomGrid(rng.uniform(-1.0, 1.0, size=(cfg.rows, cfg.cols, dim)), cfg)


def _check_vector(g: SomGrid, v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (g.dim,):
        raise SomError(f"dimension mismatch: {arr.shape} vs grid dimension {g.dim}")
    return arr


def _bmu_index(flat: np.ndarray, v: np.ndarray) -> tuple[int, float]:
    dist = np.sqrt(((flat - v) ** 2).sum(axis=1))
    idx = int(np.argmin(dist))  # first minimum == row-major tie break
    return idx, float(dist[idx])


def best_matching_unit(g: SomGrid, v) -> tuple[tuple[int, int], float]:
    arr = _check_vector(g, v)
    idx, dist = _bmu_index(g.flat(), arr)
    return divmod(idx, g.config.cols), dist


def neighbourhood(lattice_sq: np.ndarray, radius: float) -> np.ndarray:
    """Gaussian falloff over squared lattice distances, zero beyond ``radius``."""
    if radius <= 0:
        return (lattice_sq == 0).astype(float)
    h = np.exp(-lattice_sq / (2.0 * radius * radius))
    h[lattice_sq > radius * radius] = 0.0
    return h


def _lattice_sq(cfg: SomConfig) -> np.ndarray:
    """(units, units) squared grid distances between all unit pairs."""
    rr, cc = np.divmod(np.arange(cfg.rows * cfg.cols), cfg.cols)
    return (rr[:, None] - rr[None, :]) ** 2 + (cc[:, None] - cc[None, :]) ** 2.0


def train_som(g: SomGrid, vectors) -> SomGrid:
    """Return a trained copy of ``g``; the input grid is left untouched."""
    data = np.asarray(vectors, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise SomError("training needs at least one vector")
    if data.shape[1] != g.dim:
        raise SomError(f"dimension mismatch: {data.shape[1]} vs grid dimension {g.dim}")
    cfg = g.config
    rng = np.random.default_rng([cfg.seed, 1])
    lattice = _lattice_sq(cfg)
    flat = g.flat().copy()
    tau = cfg.time_constant
    for epoch in range(cfg.epochs):
        decay = math.exp(-epoch / tau)
        alpha = cfg.initial_learning_rate * decay
        radius = cfg.radius * decay
        for i in rng.permutation(data.shape[0]):
            v = data[i]
            bmu, _ = _bmu_index(flat, v)
            h = neighbourhood(lattice[bmu], radius)
            moving = h > 0
            flat[moving] += (alpha * h[moving])[:, None] * (v - flat[moving])
    return SomGrid(flat.reshape(g.weights.shape), cfg, True, g.scaler)


def assign_clusters(g: SomGrid, vectors, ids: Optional[Sequence[Hashable]] = None) -> list[ClusterAssignment]:
    if not g.trained:
        raise SomError("grid is not trained")
    data = list(vectors)
    if ids is None:
        ids = range(len(data))
    elif len(ids) != len(data):
        raise SomError("ids and vectors differ in length")
    out = []
    for record_id, v in zip(ids, data):
        unit, dist = best_matching_unit(g, v)
        out.append(ClusterAssignment(record_id, unit, dist))
    return out


def quantization_error(g: SomGrid, vectors) -> float:
    data = list(vectors)
    if not data:
        raise SomError("quantization error of an empty set")
    return float(np.mean([best_matching_unit(g, v)[1] for v in data]))


def save_grid(g: SomGrid, path) -> None:
    doc = {
        "schemaVersion": GRID_SCHEMA_VERSION,
        "config": asdict(g.config),
        "trained": g.trained,
        "dim": g.dim,
        "weights": g.flat().tolist(),
    }
    if g.scaler is not None:
        doc["scaler"] = {"mean": list(g.scaler.mean), "std": list(g.scaler.std)}
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_grid(path) -> SomGrid:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise SomError("corrupt grid") from None
    if not isinstance(doc, dict) or "schemaVersion" not in doc:
        raise SomError("corrupt grid")
    if doc["schemaVersion"] != GRID_SCHEMA_VERSION:
        raise SomError(f"unsupported version {doc['schemaVersion']!r}")
    try:
        cfg = SomConfig(**doc["config"])
        weights = np.asarray(doc["weights"], dtype=float).reshape(cfg.rows, cfg.cols, int(doc["dim"]))
        scaler = None
        if "scaler" in doc:
            scaler = FeatureScaler(tuple(doc["scaler"]["mean"]), tuple(doc["scaler"]["std"]))
        return SomGrid(weights, cfg, bool(doc["trained"]), scaler)
    except (KeyError, TypeError, ValueError):
        raise SomError("corrupt grid") from None
