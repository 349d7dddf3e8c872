"""Cluster validity measures: diameter, dissimilarity, Davies-Bouldin, Silhouette.

The Davies-Bouldin variant here scores each cluster pair by the sum of the
two cluster *diameters* (max pairwise distance) over the distance between
their centroids, not by the classical mean scatter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ValidationError(ValueError):
    pass


# max floats held by one (rows, len(b), dim) difference block
BLOCK_BUDGET = 1 << 22


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def _row_blocks(a: np.ndarray, b: np.ndarray):
    """Yield (row slice, distances from a[rows] to all of b) in bounded memory."""
    step = max(1, BLOCK_BUDGET // max(1, b.shape[0] * a.shape[1]))
    for start in range(0, a.shape[0], step):
        rows = slice(start, start + step)
        yield rows, _pairwise(a[rows], b)


@dataclass(frozen=True, eq=False)
class ClusterPartition:
    points: np.ndarray  # (n, dim)
    labels: np.ndarray  # (n,) ints in 0..k-1

    def __post_init__(self):
        if self.points.ndim != 2 or self.labels.shape != (self.points.shape[0],):
            raise ValidationError("points must be (n, dim) and labels (n,)")
        if self.points.shape[0] and (self.labels.min() < 0 or
                                     np.unique(self.labels).size != self.labels.max() + 1):
            raise ValidationError("cluster ids must be 0..k-1 with no empty cluster")

    @classmethod
    def from_labels(cls, points, labels: Sequence) -> "ClusterPartition":
        """Relabel arbitrary hashable cluster keys to 0..k-1 in sorted key order."""
        keys = sorted(set(labels))
        index = {key: i for i, key in enumerate(keys)}
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        return cls(pts, np.asarray([index[key] for key in labels], dtype=int))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return int(self.labels.max()) + 1 if self.n else 0

    def members(self, i: int) -> np.ndarray:
        if not 0 <= i < self.k:
            raise ValidationError(f"unknown cluster id {i}")
        return self.points[self.labels == i]

    def sizes(self) -> list[int]:
        return [int((self.labels == i).sum()) for i in range(self.k)]

    def centroids(self) -> np.ndarray:
        return np.stack([self.members(i).mean(axis=0) for i in range(self.k)])


def cluster_diameter(p: ClusterPartition, i: int) -> float:
    """Largest distance between two points of cluster ``i`` (0 for a singleton)."""
    pts = p.members(i)
    return float(max(block.max() for _, block in _row_blocks(pts, pts)))


def cluster_dissimilarity(p: ClusterPartition, i: int, j: int) -> float:
    """Smallest distance between a point of cluster ``i`` and one of ``j``."""
    if i == j:
        raise ValidationError("dissimilarity needs two distinct clusters")
    a, b = p.members(i), p.members(j)
    return float(min(block.min() for _, block in _row_blocks(a, b)))


def davies_bouldin_index(p: ClusterPartition) -> float:
    k = p.k
    if k < 2:
        raise ValidationError("Davies-Bouldin needs at least two clusters")
    diam = np.array([cluster_diameter(p, i) for i in range(k)])
    z = p.centroids()
    sep = _pairwise(z, z)
    off_diag = ~np.eye(k, dtype=bool)
    if np.any(sep[off_diag] == 0):
        raise ValidationError("degenerate centroids")
    ratio = (diam[:, None] + diam[None, :]) / np.where(off_diag, sep, 1.0)
    ratio[~off_diag] = -np.inf
    return float(ratio.max(axis=1).mean())


def silhouette_samples(p: ClusterPartition) -> np.ndarray:
    k = p.k
    if k < 2:
        raise ValidationError("silhouette needs at least two clusters")
    sizes = np.bincount(p.labels, minlength=k)
    # sums[x, c] = total distance from point x to the members of cluster c
    sums = np.empty((p.n, k))
    masks = [p.labels == c for c in range(k)]
    for rows, dist in _row_blocks(p.points, p.points):
        sums[rows] = np.stack([dist[:, m].sum(axis=1) for m in masks], axis=1)
    own = p.labels
    rows = np.arange(p.n)
    own_size = sizes[own]
    a = np.where(own_size > 1, sums[rows, own] / np.maximum(own_size - 1, 1), 0.0)
    means = sums / sizes[None, :]
    means[rows, own] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    return np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)


def silhouette_index(p: ClusterPartition) -> float:
    """Mean over points of (b - a) / max(a, b); singletons get a = 0, 0/0 -> 0."""
    if p.n < 2:
        raise ValidationError("silhouette needs at least two points")
    return float(silhouette_samples(p).mean())


@dataclass(frozen=True)
class ValidationReport:
    davies_bouldin: float
    silhouette: float
    per_cluster_diameter: tuple[float, ...]
    k: int
    n: int

    def as_dict(self) -> dict:
        return {
            "daviesBouldin": self.davies_bouldin,
            "silhouette": self.silhouette,
            "perClusterDiameter": list(self.per_cluster_diameter),
            "k": self.k,
            "n": self.n,
        }


def validate_partition(p: ClusterPartition) -> ValidationReport:
    return ValidationReport(
        davies_bouldin=davies_bouldin_index(p),
        silhouette=silhouette_index(p),
        per_cluster_diameter=tuple(cluster_diameter(p, i) for i in range(p.k)),
        k=p.k,
        n=p.n,
    )
