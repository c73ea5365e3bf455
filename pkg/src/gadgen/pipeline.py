"""End-to-end inference: align -> normalize -> encode -> score.

Both the few-shot path and every zero-shot round run through
``embed_graph`` + ``score_split`` so that identical splits produce
bit-identical scores regardless of which entry point asked.
"""

from __future__ import annotations

import numpy as np

from .align import AlignedFeatures, align
from .autodiff import ParamVector
from .encoder import Embeddings, EncoderConfig, encode
from .errors import ConfigError
from .graph import Graph, normalize_adjacency
from .scoring import AttentionResult, ContextSplit, ScoreVector, score_split


def embed_graph(
    g: Graph,
    params: ParamVector,
    enc_cfg: EncoderConfig,
    unified_dim: int,
    align_mode: str = "smoothness",
    align_seed: int = 0,
) -> tuple[AlignedFeatures, Embeddings]:
    aligned = align(g, unified_dim, mode=align_mode, seed=align_seed)
    adj = normalize_adjacency(g)
    emb = encode(adj, aligned.matrix, params, enc_cfg)
    return aligned, emb


def score_few_shot(
    g: Graph,
    params: ParamVector,
    enc_cfg: EncoderConfig,
    unified_dim: int,
    normal_ids: np.ndarray,
    align_mode: str = "smoothness",
    align_seed: int = 0,
) -> tuple[ScoreVector, AttentionResult]:
    """Score all non-context nodes against the given labeled-normal context."""
    normal_ids = np.asarray(normal_ids, dtype=np.int64)
    if normal_ids.size < 1:
        raise ConfigError("few-shot scoring needs at least one normal node id")
    if np.unique(normal_ids).size != normal_ids.size:
        raise ConfigError("duplicate node ids in the normal-id list")
    query_ids = np.setdiff1d(np.arange(g.node_count), normal_ids)
    split = ContextSplit(context_ids=np.sort(normal_ids), query_ids=query_ids)
    split.validate_against(g.node_count)
    _, emb = embed_graph(g, params, enc_cfg, unified_dim, align_mode, align_seed)
    attn, raw = score_split(emb.h_matrix, split, params)
    return ScoreVector(node_ids=split.query_ids, scores=raw), attn
