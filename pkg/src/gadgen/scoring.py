"""Cross-attentive in-context anomaly scoring.

Query node embeddings are reconstructed as attention-weighted mixtures of
context (known/assumed normal) node embeddings:

  Q = H_q W_q,  K = H_k W_k,
  H~_q = softmax(Q K^T / sqrt(d_e)) H_k

The attention output multiplies the raw context embeddings (no value
projection), so reconstructions stay in the embedding space and the
rowwise L2 distance ||H_q - H~_q|| is directly usable as an anomaly
score. Training pulls normal queries toward their reconstruction and
pushes anomalies away with a margin cosine loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Node, ParamVector, Tape
from .errors import ConfigError, DegenerateEmbeddingError, DimensionMismatchError

ATTENTION_EPSILON_RANGE = (-1.0, 1.0)


@dataclass(frozen=True)
class ContextSplit:
    """Disjoint context/query node index sets over one graph."""

    context_ids: np.ndarray
    query_ids: np.ndarray

    def __post_init__(self):
        ctx = np.asarray(self.context_ids, dtype=np.int64)
        qry = np.asarray(self.query_ids, dtype=np.int64)
        object.__setattr__(self, "context_ids", ctx)
        object.__setattr__(self, "query_ids", qry)
        if ctx.size < 1:
            raise ConfigError("context must contain at least one node")
        if np.intersect1d(ctx, qry).size:
            raise ConfigError("context and query sets overlap")

    def validate_against(self, node_count: int) -> None:
        ids = np.concatenate([self.context_ids, self.query_ids])
        if ids.size and (ids.min() < 0 or ids.max() >= node_count):
            raise ConfigError(f"split references nodes outside [0, {node_count})")


@dataclass(frozen=True)
class AttentionResult:
    """Attention weights (rows sum to 1) and reconstructed query rows."""

    weights: np.ndarray
    reconstructed: np.ndarray
    nodes: tuple[Node, Node] | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class ScoreVector:
    """Anomaly scores keyed by node id, plus per-round history in zero-shot."""

    node_ids: np.ndarray
    scores: np.ndarray
    round_history: list[np.ndarray] | None = None

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(s) for i, s in zip(self.node_ids, self.scores)}


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def cross_attend(
    h_q: np.ndarray | Node,
    h_k: np.ndarray | Node,
    params: ParamVector,
    tape: Tape | None = None,
) -> AttentionResult:
    """Value-free cross attention of queries over context rows."""
    d_e = params.view("attn.wq").shape[0]
    hq_val = h_q.value if isinstance(h_q, Node) else np.asarray(h_q, dtype=np.float64)
    hk_val = h_k.value if isinstance(h_k, Node) else np.asarray(h_k, dtype=np.float64)
    if hq_val.shape[1] != d_e or hk_val.shape[1] != d_e:
        raise DimensionMismatchError(
            f"attention expects width {d_e}, got {hq_val.shape[1]} / {hk_val.shape[1]}"
        )
    temp = 1.0 / np.sqrt(d_e)

    if tape is None:
        q = hq_val @ params.view("attn.wq")
        k = hk_val @ params.view("attn.wk")
        weights = _softmax_rows((q @ k.T) * temp)
        return AttentionResult(weights=weights, reconstructed=weights @ hk_val)

    hq_node = h_q if isinstance(h_q, Node) else tape.constant(hq_val)
    hk_node = h_k if isinstance(h_k, Node) else tape.constant(hk_val)
    q = tape.matmul(hq_node, tape.param(params, "attn.wq"))
    k = tape.matmul(hk_node, tape.param(params, "attn.wk"))
    logits = tape.scale(tape.matmul(q, k, transpose_b=True), temp)
    weights = tape.softmax_rows(logits)
    recon = tape.matmul(weights, hk_node)
    return AttentionResult(weights=weights.value, reconstructed=recon.value,
                           nodes=(weights, recon))


def score(h_q: np.ndarray, reconstructed: np.ndarray) -> np.ndarray:
    """Rowwise L2 reconstruction distance (the anomaly score)."""
    h_q = np.asarray(h_q, dtype=np.float64)
    reconstructed = np.asarray(reconstructed, dtype=np.float64)
    if h_q.shape != reconstructed.shape:
        raise DimensionMismatchError(f"score shapes {h_q.shape} vs {reconstructed.shape}")
    return np.linalg.norm(h_q - reconstructed, axis=1)


def _cosine_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if (na == 0).any() or (nb == 0).any():
        row = int(np.argmax((na == 0) | (nb == 0)))
        raise DegenerateEmbeddingError(f"zero-norm embedding row {row} in cosine")
    return (a * b).sum(axis=1) / (na * nb)


def loss(
    h_q: np.ndarray | Node,
    reconstructed: np.ndarray | Node,
    labels: np.ndarray,
    epsilon: float = 0.0,
    tape: Tape | None = None,
):
    """Mean margin cosine loss over a labeled query batch.

    Per sample: label 0 -> 1 - cos(h, h~); label 1 -> max(0, cos(h, h~) - epsilon).
    Returns a float, or the scalar tape Node when a tape is given.
    """
    lo, hi = ATTENTION_EPSILON_RANGE
    if not (lo <= epsilon < hi):
        raise ConfigError(f"margin epsilon must be in [{lo}, {hi})")
    labels = np.asarray(labels)
    if not np.isin(labels, (0, 1)).all():
        raise ConfigError("labels must be 0/1")

    if tape is None:
        hq_val = h_q.value if isinstance(h_q, Node) else np.asarray(h_q, dtype=np.float64)
        re_val = (reconstructed.value if isinstance(reconstructed, Node)
                  else np.asarray(reconstructed, dtype=np.float64))
        cos = _cosine_rows(hq_val, re_val)
        per = np.where(labels == 0, 1.0 - cos, np.maximum(0.0, cos - epsilon))
        return float(per.mean())

    hq_node = h_q if isinstance(h_q, Node) else tape.constant(h_q)
    re_node = reconstructed if isinstance(reconstructed, Node) else tape.constant(reconstructed)
    cos = tape.row_cosine(hq_node, re_node)
    per = tape.margin_hinge(cos, labels, epsilon)
    return tape.mean(per)


def score_split(h_matrix: np.ndarray, split: ContextSplit, params: ParamVector) -> tuple[AttentionResult, np.ndarray]:
    """Score the query side of a split against its context (inference path).

    Shared by few-shot scoring and every zero-shot round so that the two
    paths are bit-identical given identical splits.
    """
    split.validate_against(h_matrix.shape[0])
    h_k = h_matrix[split.context_ids]
    h_q = h_matrix[split.query_ids]
    attn = cross_attend(h_q, h_k, params)
    return attn, score(h_q, attn.reconstructed)
