"""Tie-aware ranking metrics for anomaly scores.

AUROC uses the Mann-Whitney formulation: the probability that a random
anomaly outranks a random normal, with ties counted half. AUPRC is
step-wise average precision over distinct score thresholds: tied scores
form one block and contribute the block-end precision, so the value is
invariant to the order of tied items.

``auroc_pairwise`` and ``auprc_threshold_sweep`` are deliberately naive
O(n^2) reference implementations kept for cross-checking the fast paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class MetricReport:
    auroc: float
    auprc: float
    positives: int
    negatives: int

    def to_json(self) -> str:
        return json.dumps(
            {"auroc": self.auroc, "auprc": self.auprc,
             "positives": self.positives, "negatives": self.negatives},
            sort_keys=True,
        )


def _validate(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError(f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors")
    if not np.isin(labels, (0, 1)).all():
        raise DataError("labels must be 0/1")
    return scores, labels.astype(np.int64)


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    # 1-based ranks, tied values share the mean of their rank range
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """(#correctly ordered anomaly/normal pairs + half the ties) / (P*N)."""
    scores, labels = _validate(scores, labels)
    pos = int(labels.sum())
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise DataError("AUROC needs both classes present")
    ranks = _average_ranks(scores)
    u = ranks[labels == 1].sum() - pos * (pos + 1) / 2.0
    return float(u / (pos * neg))


def auprc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Average precision over distinct descending thresholds."""
    scores, labels = _validate(scores, labels)
    pos = int(labels.sum())
    if pos == 0:
        raise DataError("AUPRC needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    y = labels[order]
    s = scores[order]
    tp = np.cumsum(y)
    count = np.arange(1, len(y) + 1)
    block_end = np.append(s[1:] != s[:-1], True)
    precision = tp[block_end] / count[block_end]
    recall = tp[block_end] / pos
    return float(np.sum(np.diff(np.concatenate([[0.0], recall])) * precision))


def report(scores: np.ndarray, labels: np.ndarray) -> MetricReport:
    scores, labels = _validate(scores, labels)
    return MetricReport(
        auroc=auroc(scores, labels),
        auprc=auprc(scores, labels),
        positives=int(labels.sum()),
        negatives=int(len(labels) - labels.sum()),
    )


# ---------------------------------------------------------------------------
# brute-force references
# ---------------------------------------------------------------------------

def auroc_pairwise(scores: np.ndarray, labels: np.ndarray) -> float:
    """Enumerate every (anomaly, normal) pair directly."""
    scores, labels = _validate(scores, labels)
    sa = scores[labels == 1]
    sn = scores[labels == 0]
    if sa.size == 0 or sn.size == 0:
        raise DataError("AUROC needs both classes present")
    gt = (sa[:, None] > sn[None, :]).sum()
    eq = (sa[:, None] == sn[None, :]).sum()
    return float((gt + 0.5 * eq) / (sa.size * sn.size))


def auprc_threshold_sweep(scores: np.ndarray, labels: np.ndarray) -> float:
    """Recompute precision/recall from scratch at every distinct threshold."""
    scores, labels = _validate(scores, labels)
    pos = int(labels.sum())
    if pos == 0:
        raise DataError("AUPRC needs at least one positive")
    ap = 0.0
    prev_recall = 0.0
    for t in sorted(set(scores.tolist()), reverse=True):
        picked = scores >= t
        tp = int(labels[picked].sum())
        precision = tp / int(picked.sum())
        recall = tp / pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap
