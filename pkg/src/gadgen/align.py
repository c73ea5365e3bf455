"""Smoothness-based feature alignment.

Graphs from different datasets disagree in feature dimension and
semantics. Alignment standardizes both without any trainable state:

  1. min-max scale each raw feature column to [0, 1],
  2. project to a unified width ``d_u`` with per-dataset PCA,
  3. score each projected column by feature smoothness
     s_k = -(1/m) * sum over undirected edges of (x_ik - x_jk)^2,
  4. reorder columns ascending in s_k, so column 0 carries the
     highest-frequency (most anomaly-relevant) signal.

Smoothness equals the negative normalized Dirichlet energy of the column,
which is what ties the ordering to anomaly relevance: low s_k means high
energy in high-frequency spectral components.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatchError, NoEdgesError
from .graph import Graph

logger = logging.getLogger(__name__)

ALIGN_MODES = ("smoothness", "random_projection")


@dataclass(frozen=True)
class ProjectionModel:
    """Linear projection onto the top principal directions.

    ``basis`` has ``min(unified_dim, source_dim)`` orthonormal columns;
    when the source has fewer dimensions than the unified width the
    transform pads with zero columns (placed last, never reordered).
    """

    basis: np.ndarray
    mean: np.ndarray
    source_dim: int
    unified_dim: int
    zero_variance: bool = False

    def transform(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.source_dim:
            raise DimensionMismatchError(
                f"expected {self.source_dim} columns, got {x.shape[1]}"
            )
        z = (x - self.mean) @ self.basis
        if z.shape[1] < self.unified_dim:
            pad = np.zeros((x.shape[0], self.unified_dim - z.shape[1]))
            z = np.concatenate([z, pad], axis=1)
        return z


@dataclass(frozen=True)
class SmoothnessVector:
    """Per-column smoothness values and the ascending sort permutation."""

    values: np.ndarray
    order: np.ndarray


@dataclass(frozen=True)
class AlignedFeatures:
    """Projected and smoothness-sorted feature matrix with provenance.

    ``smoothness`` is None in the random-projection ablation, where no
    sorting is applied.
    """

    matrix: np.ndarray
    projection: ProjectionModel = field(repr=False)
    smoothness: SmoothnessVector | None = field(default=None, repr=False)


def minmax_scale(x: np.ndarray) -> np.ndarray:
    """Scale each column to [0, 1]; constant columns map to 0."""
    x = np.asarray(x, dtype=np.float64)
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    out = np.zeros_like(x)
    live = span > 0
    out[:, live] = (x[:, live] - lo[live]) / span[live]
    return out


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    # Deterministic sign convention: largest-magnitude entry of each
    # column is positive (first index wins ties).
    basis = basis.copy()
    for j in range(basis.shape[1]):
        i = int(np.argmax(np.abs(basis[:, j])))
        if basis[i, j] < 0:
            basis[:, j] = -basis[:, j]
    return basis


def fit_projection(x: np.ndarray, unified_dim: int) -> ProjectionModel:
    """Mean-centered PCA onto the top ``unified_dim`` directions.

    Directions are ordered by descending eigenvalue with stable index
    tie-breaking; an all-rows-identical input yields a flagged
    zero-variance model whose projection is all zeros.
    """
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    if n < 2:
        raise ConfigError("PCA needs at least 2 rows")
    if unified_dim < 1:
        raise ConfigError("unified_dim must be >= 1")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc
    eigval, eigvec = np.linalg.eigh(cov)
    # eigh returns ascending order; make it descending, stable in index
    order = np.argsort(-eigval, kind="stable")
    r = min(unified_dim, d)
    basis = _fix_signs(eigvec[:, order[:r]])

    zero_variance = bool(eigval.max(initial=0.0) <= 1e-12 * max(1.0, abs(eigval).max(initial=0.0)) or eigval.max(initial=0.0) <= 0.0)
    if zero_variance:
        logger.warning("zero-variance input to PCA; basis is an arbitrary orthonormal completion")
    return ProjectionModel(basis=basis, mean=mean, source_dim=d,
                           unified_dim=unified_dim, zero_variance=zero_variance)


def random_projection(source_dim: int, unified_dim: int, seed: int) -> ProjectionModel:
    """Seeded random orthonormal basis (alignment-ablation projection)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    r = min(unified_dim, source_dim)
    q, _ = np.linalg.qr(rng.standard_normal((source_dim, r)))
    return ProjectionModel(basis=_fix_signs(q), mean=np.zeros(source_dim),
                           source_dim=source_dim, unified_dim=unified_dim)


def smoothness(edge_pairs: np.ndarray, x: np.ndarray) -> SmoothnessVector:
    """Per-column smoothness over the undirected edge list.

    s_k = -(1/m) * sum_{(i,j) in E} (x_ik - x_jk)^2, each edge once.
    The permutation sorts ascending in s_k (most negative first), ties
    broken by column index.
    """
    edge_pairs = np.asarray(edge_pairs, dtype=np.int64).reshape(-1, 2)
    m = edge_pairs.shape[0]
    if m == 0:
        raise NoEdgesError("smoothness is undefined on a graph with no edges")
    diff = x[edge_pairs[:, 0]] - x[edge_pairs[:, 1]]
    values = -(diff * diff).sum(axis=0) / m
    order = np.argsort(values, kind="stable")
    return SmoothnessVector(values=values, order=order)


def align(g: Graph, unified_dim: int, mode: str = "smoothness", seed: int = 0) -> AlignedFeatures:
    """Full alignment pipeline for one graph.

    mode "smoothness" is the standard pipeline; "random_projection"
    replaces PCA with a seeded random orthonormal basis and skips the
    smoothness sorting (ablation switch).
    """
    if mode not in ALIGN_MODES:
        raise ConfigError(f"unknown alignment mode {mode!r}")
    scaled = minmax_scale(g.features)
    if mode == "random_projection":
        proj = random_projection(g.feature_dim, unified_dim, seed)
        return AlignedFeatures(matrix=proj.transform(scaled), projection=proj)
    proj = fit_projection(scaled, unified_dim)
    z = proj.transform(scaled)
    sv = smoothness(g.edge_pairs(), z)
    return AlignedFeatures(matrix=z[:, sv.order], projection=proj, smoothness=sv)
