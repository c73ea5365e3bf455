from __future__ import annotations

import struct

import numpy as np
import pytest

from gadgen.errors import FormatError, IndexOutOfRangeError, NonFiniteFeatureError
from gadgen.graph import (
    MAGIC,
    Graph,
    build_graph,
    load_graph,
    normalize_adjacency,
    propagate,
    save_graph,
)

from conftest import random_graph, ring_graph


def dense_normalized(g: Graph) -> np.ndarray:
    # independent dense construction of D^-1/2 (A+I) D^-1/2
    n = g.node_count
    a = np.zeros((n, n))
    for i, j in g.edge_pairs():
        a[i, j] = a[j, i] = 1.0
    deg = a.sum(axis=1)
    ahat = a + np.eye(n)
    dinv = 1.0 / np.sqrt(deg + 1.0)
    return dinv[:, None] * ahat * dinv[None, :]


def test_smallest_valid_graph(tmp_path):
    g = build_graph(2, np.array([[0, 1]]), np.array([[0.0], [1.0]]))
    path = save_graph(g, tmp_path / "tiny.gadg")
    loaded = load_graph(path)
    assert loaded.node_count == 2
    assert loaded.edge_count == 1


def test_duplicate_and_reversed_edges_dedup():
    g = build_graph(2, np.array([[0, 1], [1, 0], [0, 1]]), np.zeros((2, 1)))
    assert g.edge_count == 1


def test_duplicate_entries_in_file_dedup(tmp_path):
    # hand-written file claiming m=2 but listing the same edge twice per row
    n, m, d = 2, 2, 1
    parts = [
        MAGIC, struct.pack("<I", 1), struct.pack("<QQQ", n, m, d),
        struct.pack("<B", 0),
        np.array([0, 2, 4], dtype="<u8").tobytes(),
        np.array([1, 1, 0, 0], dtype="<u8").tobytes(),
        np.zeros(2, dtype="<f8").tobytes(),
        struct.pack("<I", 0),
    ]
    path = tmp_path / "dup.gadg"
    path.write_bytes(b"".join(parts))
    assert load_graph(path).edge_count == 1


def test_nan_feature_rejected():
    feats = np.zeros((5, 2))
    feats[3, 1] = np.nan
    with pytest.raises(NonFiniteFeatureError) as err:
        build_graph(5, np.array([[0, 1]]), feats)
    assert err.value.row == 3


def test_self_loops_dropped():
    g = build_graph(3, np.array([[0, 0], [0, 1]]), np.zeros((3, 1)))
    assert g.edge_count == 1


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.gadg"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(FormatError):
        load_graph(path)


def test_truncated_file_rejected(tmp_path):
    g = random_graph(6, 3, seed=5)
    path = save_graph(g, tmp_path / "g.gadg")
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(FormatError):
        load_graph(path)


def test_out_of_range_index_rejected(tmp_path):
    n, m, d = 2, 1, 1
    parts = [
        MAGIC, struct.pack("<I", 1), struct.pack("<QQQ", n, m, d),
        struct.pack("<B", 0),
        np.array([0, 1, 2], dtype="<u8").tobytes(),
        np.array([7, 0], dtype="<u8").tobytes(),
        np.zeros(2, dtype="<f8").tobytes(),
        struct.pack("<I", 0),
    ]
    path = tmp_path / "oob.gadg"
    path.write_bytes(b"".join(parts))
    with pytest.raises(IndexOutOfRangeError):
        load_graph(path)


def test_roundtrip_identity(tmp_path):
    g = random_graph(12, 4, seed=3, labels=True)
    p1 = save_graph(g, tmp_path / "a.gadg")
    g2 = load_graph(p1)
    p2 = save_graph(g2, tmp_path / "b.gadg")
    g3 = load_graph(p2)
    assert g2.node_count == g3.node_count == g.node_count
    assert np.array_equal(g2.indptr, g3.indptr)
    assert np.array_equal(g2.indices, g3.indices)
    assert np.array_equal(g2.features, g3.features)
    assert np.array_equal(g2.labels, g3.labels)
    assert g2.name == g3.name == g.name
    # byte-identical files, too
    assert (tmp_path / "a.gadg").read_bytes() == (tmp_path / "b.gadg").read_bytes()


def test_meta_sidecar(tmp_path):
    import json
    g = random_graph(8, 2, seed=1, labels=True)
    save_graph(g, tmp_path / "g.gadg")
    meta = json.loads((tmp_path / "g.gadg.meta.json").read_text())
    assert meta["n"] == 8
    assert meta["m"] == g.edge_count
    assert meta["anomaly_count"] == int(g.labels.sum())


def test_isolated_node_normalization():
    g = build_graph(3, np.array([[0, 1]]), np.zeros((3, 1)))
    nad = normalize_adjacency(g)
    dense = nad.matrix.toarray()
    assert dense[2, 2] == 1.0  # degree 0 -> 1/(0+1)
    assert dense[2, :2].sum() == 0.0


def test_two_cycle_normalization_values():
    g = build_graph(2, np.array([[0, 1]]), np.zeros((2, 1)))
    dense = normalize_adjacency(g).matrix.toarray()
    # both degrees 1 -> every entry of A+I scaled by 1/sqrt(2*2)
    assert np.allclose(dense, np.array([[0.5, 0.5], [0.5, 0.5]]), atol=0)


def test_regular_ring_preserves_constants():
    g = ring_graph(4, value=1.0)
    nad = normalize_adjacency(g)
    out = propagate(nad, np.ones((4, 2)))
    assert np.allclose(out, 1.0, atol=1e-12)


def test_propagate_zeros():
    g = random_graph(7, 2, seed=9)
    nad = normalize_adjacency(g)
    assert np.array_equal(propagate(nad, np.zeros((7, 3))), np.zeros((7, 3)))


def test_propagate_matches_dense_oracle():
    rng = np.random.Generator(np.random.PCG64(42))
    for seed in range(5):
        g = random_graph(10, 3, seed=seed)
        nad = normalize_adjacency(g)
        x = rng.standard_normal((10, 3))
        expected = dense_normalized(g) @ x
        assert np.allclose(propagate(nad, x), expected, atol=1e-12)


def test_propagate_linearity():
    rng = np.random.Generator(np.random.PCG64(7))
    for seed in range(5):
        g = random_graph(9, 2, seed=seed + 20)
        nad = normalize_adjacency(g)
        x = rng.standard_normal((9, 4))
        z = rng.standard_normal((9, 4))
        a, b = rng.standard_normal(2)
        lhs = propagate(nad, a * x + b * z)
        rhs = a * propagate(nad, x) + b * propagate(nad, z)
        assert np.allclose(lhs, rhs, atol=1e-10)


def test_normalization_deterministic(tmp_path):
    g = random_graph(15, 3, seed=11)
    path = save_graph(g, tmp_path / "g.gadg")
    n1 = normalize_adjacency(load_graph(path))
    n2 = normalize_adjacency(load_graph(path))
    assert np.array_equal(n1.matrix.data, n2.matrix.data)
    assert np.array_equal(n1.matrix.indices, n2.matrix.indices)
    assert np.array_equal(n1.matrix.indptr, n2.matrix.indptr)


def test_spectral_radius_at_most_one():
    # power iteration on small instances
    rng = np.random.Generator(np.random.PCG64(3))
    for seed in range(6):
        g = random_graph(12, 2, p=0.4, seed=seed + 50)
        dense = normalize_adjacency(g).matrix.toarray()
        v = rng.standard_normal(12)
        for _ in range(200):
            v = dense @ v
            v /= np.linalg.norm(v)
        radius = abs(v @ dense @ v)
        assert radius <= 1.0 + 1e-10


def test_edge_pairs_each_edge_once():
    g = random_graph(10, 2, seed=2)
    pairs = g.edge_pairs()
    assert pairs.shape[0] == g.edge_count
    assert (pairs[:, 0] < pairs[:, 1]).all()
