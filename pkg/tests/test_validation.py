import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from botgraph import validation
from botgraph.validation import (
    ClusterPartition, ValidationError, cluster_diameter, cluster_dissimilarity,
    davies_bouldin_index, silhouette_index, silhouette_samples, validate_partition,
)

TWO_BLOBS = [(0, 0), (0, 1), (4, 0), (4, 1)]


def part(points, labels):
    return ClusterPartition.from_labels(points, labels)


def test_diameter_examples():
    assert cluster_diameter(part([(0, 0), (9, 9)], [0, 1]), 0) == 0
    assert cluster_diameter(part([(0, 0), (0, 1), (9, 9)], [0, 0, 1]), 0) == 1
    assert cluster_diameter(part([(0, 0), (3, 4), (0, 1), (9, 9)], [0, 0, 0, 1]), 0) == 5


def test_dissimilarity_examples():
    p = part(TWO_BLOBS, [0, 0, 1, 1])
    assert cluster_dissimilarity(p, 0, 1) == 4
    assert cluster_dissimilarity(part([(1, 1), (2, 2), (1, 1)], [0, 0, 1]), 0, 1) == 0
    with pytest.raises(ValidationError):
        cluster_dissimilarity(p, 1, 1)


def test_davies_bouldin_examples():
    assert davies_bouldin_index(part(TWO_BLOBS, [0, 0, 1, 1])) == pytest.approx(0.5, abs=1e-12)
    assert davies_bouldin_index(part([(0, 0), (5, 5)], ["a", "b"])) == 0
    with pytest.raises(ValidationError, match="degenerate centroids"):
        davies_bouldin_index(part([(-1, 0), (1, 0), (0, -1), (0, 1)], [0, 0, 1, 1]))


def test_silhouette_examples():
    expected = ((10 + math.sqrt(101)) / 2 - 1) / ((10 + math.sqrt(101)) / 2)
    p = part([(0, 0), (0, 1), (10, 0), (10, 1)], [0, 0, 1, 1])
    assert silhouette_index(p) == pytest.approx(expected, abs=1e-12)
    assert silhouette_index(part([(0, 0), (7, 7)], [0, 1])) == 1
    assert silhouette_index(part([(2, 2)] * 4, [0, 1, 0, 1])) == 0


def test_needs_two_clusters():
    p = part([(0, 0), (1, 1)], [0, 0])
    with pytest.raises(ValidationError):
        davies_bouldin_index(p)
    with pytest.raises(ValidationError):
        silhouette_index(p)


def test_partition_rejects_gaps():
    with pytest.raises(ValidationError):
        ClusterPartition(np.zeros((3, 2)), np.array([0, 2, 2]))
    with pytest.raises(ValidationError):
        ClusterPartition(np.zeros((3, 2)), np.array([0, 1]))


def test_from_labels_accepts_tuples_and_1d_points():
    p = part([1.0, 2.0, 8.0], [(1, 1), (1, 1), (0, 3)])
    assert p.points.shape == (3, 1) and p.labels.tolist() == [1, 1, 0]
    assert p.sizes() == [1, 2]


def test_report():
    r = validate_partition(part(TWO_BLOBS, [0, 0, 1, 1])).as_dict()
    assert r["k"] == 2 and r["n"] == 4
    assert r["daviesBouldin"] == pytest.approx(0.5)
    assert r["perClusterDiameter"] == [1.0, 1.0]


def test_blocked_distances_match_unblocked(monkeypatch):
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(60, 3))
    labels = rng.integers(0, 3, 60)
    labels[:3] = [0, 1, 2]
    p = ClusterPartition(pts, labels)
    full = (silhouette_samples(p), davies_bouldin_index(p))
    monkeypatch.setattr(validation, "BLOCK_BUDGET", 7)
    assert np.allclose(silhouette_samples(p), full[0], rtol=0, atol=1e-12)
    assert davies_bouldin_index(p) == pytest.approx(full[1], abs=1e-12)


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@settings(max_examples=60)
@given(st.integers(0, 10_000), st.floats(0, 2 * math.pi), st.floats(-50, 50), st.floats(-50, 50))
def test_rigid_motion_invariance(seed, theta, dx, dy):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 30))
    labels = np.concatenate([[0, 1], rng.integers(0, 3, n - 2)])
    labels = np.unique(labels, return_inverse=True)[1]
    pts = rng.normal(size=(n, 2)) * 3
    moved = pts @ rotation(theta).T + [dx, dy]
    a, b = ClusterPartition(pts, labels), ClusterPartition(moved, labels)
    assert silhouette_index(a) == pytest.approx(silhouette_index(b), abs=1e-9)
    try:
        db = davies_bouldin_index(a)
    except ValidationError:
        return
    assert db == pytest.approx(davies_bouldin_index(b), abs=1e-9)


def test_separation_monotonicity():
    rng = np.random.default_rng(7)
    a = rng.normal(0, 0.3, (20, 2))
    b = rng.normal(0, 0.3, (20, 2)) + 3
    labels = [0] * 20 + [1] * 20
    prev_db, prev_si = math.inf, -math.inf
    for shift in (0, 1, 2, 4, 8):
        p = part(np.vstack([a, b + shift]), labels)
        db, si = davies_bouldin_index(p), silhouette_index(p)
        assert db < prev_db and si > prev_si
        prev_db, prev_si = db, si
