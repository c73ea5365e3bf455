"""Attributed-graph data model, canonical binary file format, and the
normalized adjacency operator used by every downstream stage.

Storage conventions:
  * undirected, no self-loops; each edge counted once in ``edge_count``
    but stored in both CSR directions,
  * features are dense float64, row-major,
  * optional 0/1 anomaly labels.

The one graph file format ("GADG", little-endian throughout):

  magic "GADG" | version u32 | n u64 | m u64 | d u64 | has_labels u8
  | row offsets (n+1) u64 | column indices (2m) u64
  | features (n*d) f64 row-major | labels (n) u8 if present
  | name length u32 | name UTF-8

A ``<file>.meta.json`` sidecar with {name, n, m, d, anomaly_count} is
written next to every saved graph for quick inspection.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatchError,
    FormatError,
    IndexOutOfRangeError,
    NonFiniteFeatureError,
)

MAGIC = b"GADG"
VERSION = 1


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Graph:
    """Immutable attributed graph with CSR adjacency.

    ``indptr``/``indices`` store the symmetric adjacency (both directions
    of every undirected edge); ``edge_count`` counts each edge once.
    """

    node_count: int
    edge_count: int
    indptr: np.ndarray
    indices: np.ndarray
    features: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr).astype(np.int64)

    def edge_pairs(self) -> np.ndarray:
        """Return the m undirected edges as an (m, 2) array with i < j."""
        counts = np.diff(self.indptr.astype(np.int64))
        rows = np.repeat(np.arange(self.node_count), counts)
        cols = self.indices.astype(np.int64)
        keep = rows < cols
        return np.stack([rows[keep], cols[keep]], axis=1).astype(np.int64)

    def without_labels(self) -> "Graph":
        """Label-stripped view sharing all other arrays (zero-shot purity)."""
        return Graph(
            node_count=self.node_count,
            edge_count=self.edge_count,
            indptr=self.indptr,
            indices=self.indices,
            features=self.features,
            labels=None,
            name=self.name,
        )


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Symmetric self-loop normalization D̂^{-1/2}(A+I)D̂^{-1/2} in CSR form."""

    matrix: sp.csr_matrix = field(repr=False)
    scheme: str = "sym_selfloop"

    @property
    def node_count(self) -> int:
        return self.matrix.shape[0]


def build_graph(
    node_count: int,
    edges: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray | None = None,
    name: str = "",
) -> Graph:
    """Construct a validated Graph from an edge list.

    The edge list may contain duplicates, both orientations, and
    self-loops; it is symmetrized, deduplicated, and self-loops are
    dropped so the stored adjacency satisfies the storage invariants.
    """
    if node_count < 1:
        raise FormatError("graph must have at least one node")
    features = np.ascontiguousarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != node_count:
        raise DimensionMismatchError(
            f"features shape {features.shape} does not match n={node_count}"
        )
    if features.shape[1] < 1:
        raise FormatError("feature dimension must be >= 1")
    _check_finite(features)

    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= node_count):
        bad = edges[(edges < 0) | (edges >= node_count)].flat[0]
        raise IndexOutOfRangeError(f"edge endpoint {bad} outside [0, {node_count})")
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    keep = lo != hi
    pairs = np.unique(np.stack([lo[keep], hi[keep]], axis=1), axis=0)
    m = pairs.shape[0]

    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(node_count + 1, dtype=np.uint64)
    np.cumsum(np.bincount(rows, minlength=node_count), out=indptr[1:])
    indices = cols.astype(np.uint64)

    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (node_count,):
            raise DimensionMismatchError(
                f"labels shape {labels.shape} does not match n={node_count}"
            )
        if not np.isin(labels, (0, 1)).all():
            raise FormatError("labels must be 0/1")
        labels = _frozen(labels.astype(np.uint8))

    return Graph(
        node_count=node_count,
        edge_count=int(m),
        indptr=_frozen(indptr),
        indices=_frozen(indices),
        features=_frozen(features),
        labels=labels,
        name=name,
    )


def _check_finite(features: np.ndarray) -> None:
    finite = np.isfinite(features)
    if not finite.all():
        row, col = np.argwhere(~finite)[0]
        raise NonFiniteFeatureError(int(row), int(col))


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def save_graph(g: Graph, path: str | Path) -> Path:
    """Write the canonical binary format plus the .meta.json sidecar."""
    path = Path(path)
    has_labels = g.labels is not None
    parts = [
        MAGIC,
        struct.pack("<I", VERSION),
        struct.pack("<QQQ", g.node_count, g.edge_count, g.feature_dim),
        struct.pack("<B", 1 if has_labels else 0),
        np.ascontiguousarray(g.indptr, dtype="<u8").tobytes(),
        np.ascontiguousarray(g.indices, dtype="<u8").tobytes(),
        np.ascontiguousarray(g.features, dtype="<f8").tobytes(),
    ]
    if has_labels:
        parts.append(np.ascontiguousarray(g.labels, dtype=np.uint8).tobytes())
    name_bytes = g.name.encode("utf-8")
    parts.append(struct.pack("<I", len(name_bytes)))
    parts.append(name_bytes)
    path.write_bytes(b"".join(parts))

    meta = {
        "name": g.name,
        "n": g.node_count,
        "m": g.edge_count,
        "d": g.feature_dim,
        "anomaly_count": int(g.labels.sum()) if has_labels else None,
    }
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2) + "\n")
    return path


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, size: int, what: str) -> bytes:
        if self.pos + size > len(self.buf):
            raise FormatError(f"truncated file while reading {what}")
        out = self.buf[self.pos : self.pos + size]
        self.pos += size
        return out

    def array(self, dtype: str, count: int, what: str) -> np.ndarray:
        raw = self.take(count * np.dtype(dtype).itemsize, what)
        return np.frombuffer(raw, dtype=dtype).copy()


def load_graph(path: str | Path) -> Graph:
    """Read a canonical graph file, enforcing all storage invariants.

    Symmetry is enforced by symmetrizing whatever entries the file lists;
    duplicate entries are deduplicated and self-loops dropped, so
    ``edge_count`` reflects the cleaned structure.
    """
    path = Path(path)
    r = _Reader(path.read_bytes())
    if r.take(4, "magic") != MAGIC:
        raise FormatError(f"{path}: not a GADG file (bad magic)")
    (version,) = struct.unpack("<I", r.take(4, "version"))
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    n, m, d = struct.unpack("<QQQ", r.take(24, "header"))
    if n < 1 or d < 1:
        raise FormatError(f"{path}: invalid header n={n} d={d}")
    (has_labels,) = struct.unpack("<B", r.take(1, "label flag"))
    if has_labels not in (0, 1):
        raise FormatError(f"{path}: invalid label flag {has_labels}")

    indptr = r.array("<u8", n + 1, "row offsets")
    if indptr[0] != 0 or indptr[-1] != 2 * m or np.any(np.diff(indptr.astype(np.int64)) < 0):
        raise FormatError(f"{path}: row offsets are not monotone from 0 to 2m")
    indices = r.array("<u8", 2 * m, "column indices")
    if indices.size and indices.max() >= n:
        raise IndexOutOfRangeError(
            f"{path}: column index {int(indices.max())} outside [0, {n})"
        )
    features = r.array("<f8", n * d, "features").reshape(n, d)
    labels = r.array("u1", n, "labels") if has_labels else None
    (name_len,) = struct.unpack("<I", r.take(4, "name length"))
    name = r.take(name_len, "name").decode("utf-8")

    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr.astype(np.int64)))
    edges = np.stack([rows, indices.astype(np.int64)], axis=1)
    return build_graph(int(n), edges, features, labels=labels, name=name)


# ---------------------------------------------------------------------------
# normalization and propagation
# ---------------------------------------------------------------------------

def normalize_adjacency(g: Graph) -> NormalizedAdjacency:
    """D̂^{-1/2}(A+I)D̂^{-1/2} with D̂ = D + I, as a CSR operator.

    Entry (i, j) of the result is 1/sqrt((d_i+1)(d_j+1)) for every edge of
    A+I; isolated nodes keep a well-defined diagonal entry of 1.
    """
    n = g.node_count
    deg = g.degrees().astype(np.float64)
    inv_sqrt = 1.0 / np.sqrt(deg + 1.0)

    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(g.indptr.astype(np.int64)))
    cols = g.indices.astype(np.int64)
    rows = np.concatenate([rows, np.arange(n, dtype=np.int64)])
    cols = np.concatenate([cols, np.arange(n, dtype=np.int64)])
    vals = inv_sqrt[rows] * inv_sqrt[cols]

    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    matrix = sp.csr_matrix((vals, cols, indptr), shape=(n, n))
    return NormalizedAdjacency(matrix=matrix)


def propagate(adj: NormalizedAdjacency, x: np.ndarray) -> np.ndarray:
    """One parameter-free propagation step: Ã·x by sparse-dense multiply."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != adj.node_count:
        raise DimensionMismatchError(
            f"cannot propagate shape {x.shape} over {adj.node_count} nodes"
        )
    return np.asarray(adj.matrix @ x)
