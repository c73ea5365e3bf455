"""Zero-shot scoring via iteratively refined pseudo-context.

No target-graph labels are read anywhere on this path. A pseudo-context
of assumed-normal nodes is bootstrapped (by default: k-means over the
aligned features, one medoid-closest node per cluster), then refined for
T rounds: score the query pool against the current pseudo-context, pick
the n_k lowest-scoring query nodes as the next pseudo-context, and return
everything else to the pool. Per round, pseudo-context nodes are imputed
with the round's minimum query score so every node has a score in every
round; the final score is the arithmetic mean across rounds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .align import AlignedFeatures
from .autodiff import ParamVector
from .cluster import cluster_medoids, kmeans
from .encoder import Embeddings, EncoderConfig
from .errors import ConfigError
from .graph import Graph
from .pipeline import embed_graph
from .scoring import ContextSplit, ScoreVector, score_split

INIT_STRATEGIES = ("feature_kmeans", "random", "mean_degree", "embedding_kmeans")


@dataclass(frozen=True)
class ZeroShotConfig:
    n_k: int = 10
    rounds: int = 3
    init_strategy: str = "feature_kmeans"
    kmeans_max_iters: int = 100
    kmeans_restarts: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.n_k < 1 or self.rounds < 1:
            raise ConfigError("n_k >= 1 and rounds >= 1 required")
        if self.init_strategy not in INIT_STRATEGIES:
            raise ConfigError(f"unknown init strategy {self.init_strategy!r}")


@dataclass(frozen=True)
class RoundRecord:
    context_ids: np.ndarray
    query_ids: np.ndarray
    query_scores: np.ndarray
    imputed: np.ndarray  # full length-n score map for this round


@dataclass(frozen=True)
class ZeroShotTrace:
    rounds: list[RoundRecord]
    final: ScoreVector = field(repr=False)

    def to_json(self) -> str:
        return json.dumps({
            "rounds": [
                {
                    "context_ids": r.context_ids.tolist(),
                    "query_ids": r.query_ids.tolist(),
                    "query_scores": r.query_scores.tolist(),
                    "imputed": r.imputed.tolist(),
                }
                for r in self.rounds
            ],
            "final_scores": self.final.scores.tolist(),
        }, sort_keys=True)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n")
        return path


def init_pseudo_context(
    aligned: AlignedFeatures,
    cfg: ZeroShotConfig,
    degrees: np.ndarray | None = None,
    embeddings: Embeddings | None = None,
) -> np.ndarray:
    """Pick the initial n_k pseudo-normal node ids (sorted ascending)."""
    n = aligned.matrix.shape[0]
    if n < cfg.n_k:
        raise ConfigError(f"n_k={cfg.n_k} exceeds {n} nodes")

    if cfg.init_strategy == "random":
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
        return np.sort(rng.choice(n, size=cfg.n_k, replace=False)).astype(np.int64)

    if cfg.init_strategy == "mean_degree":
        if degrees is None:
            raise ConfigError("mean_degree init needs node degrees")
        gap = np.abs(degrees.astype(np.float64) - degrees.mean())
        return np.sort(np.argsort(gap, kind="stable")[: cfg.n_k]).astype(np.int64)

    basis = (embeddings.h_matrix if cfg.init_strategy == "embedding_kmeans"
             else aligned.matrix)
    if basis is None:
        raise ConfigError("embedding_kmeans init needs embeddings")
    centers, assign, _ = kmeans(basis, cfg.n_k, seed=cfg.seed,
                                max_iters=cfg.kmeans_max_iters,
                                restarts=cfg.kmeans_restarts)
    return cluster_medoids(basis, centers, assign)


def refine_round(
    h_matrix: np.ndarray,
    split: ContextSplit,
    params: ParamVector,
    n_k: int,
) -> tuple[np.ndarray, ContextSplit]:
    """Score the current query pool, then promote the n_k lowest scorers.

    The previous pseudo-context returns to the query pool: the next query
    set is everything outside the next context.
    """
    _, raw = score_split(h_matrix, split, params)
    order = np.argsort(raw, kind="stable")  # ties resolve to lowest node id
    next_context = np.sort(split.query_ids[order[: n_k]])
    next_query = np.setdiff1d(np.arange(h_matrix.shape[0]), next_context)
    return raw, ContextSplit(context_ids=next_context, query_ids=next_query)


def impute_and_average(rounds: list[RoundRecord]) -> ScoreVector:
    """Mean of the per-round imputed score maps."""
    stacked = np.stack([r.imputed for r in rounds])
    final = stacked.mean(axis=0)
    return ScoreVector(node_ids=np.arange(final.size, dtype=np.int64),
                       scores=final,
                       round_history=[r.imputed for r in rounds])


def score_zero_shot(
    g: Graph,
    params: ParamVector,
    enc_cfg: EncoderConfig,
    unified_dim: int,
    cfg: ZeroShotConfig,
    align_mode: str = "smoothness",
    align_seed: int = 0,
    initial_context: np.ndarray | None = None,
) -> tuple[ScoreVector, ZeroShotTrace]:
    """Label-free scoring of every node of an unseen graph.

    ``initial_context`` overrides the init strategy with a fixed node set
    (used by the equivalence tests against the few-shot path).
    """
    g = g.without_labels()
    n = g.node_count
    if cfg.n_k * cfg.rounds >= n:
        raise ConfigError(f"n_k*rounds = {cfg.n_k * cfg.rounds} must be < n = {n}")

    aligned, emb = embed_graph(g, params, enc_cfg, unified_dim, align_mode, align_seed)
    if initial_context is not None:
        context = np.sort(np.asarray(initial_context, dtype=np.int64))
        if context.size != cfg.n_k:
            raise ConfigError("initial context size must equal n_k")
    else:
        context = init_pseudo_context(
            aligned, cfg, degrees=g.degrees(),
            embeddings=emb if cfg.init_strategy == "embedding_kmeans" else None,
        )
    split = ContextSplit(context_ids=context,
                         query_ids=np.setdiff1d(np.arange(n), context))

    records: list[RoundRecord] = []
    for _ in range(cfg.rounds):
        raw, next_split = refine_round(emb.h_matrix, split, params, cfg.n_k)
        imputed = np.empty(n, dtype=np.float64)
        imputed[split.query_ids] = raw
        imputed[split.context_ids] = raw.min()
        records.append(RoundRecord(context_ids=split.context_ids,
                                   query_ids=split.query_ids,
                                   query_scores=raw, imputed=imputed))
        split = next_split

    final = impute_and_average(records)
    return final, ZeroShotTrace(rounds=records, final=final)
