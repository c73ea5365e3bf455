"""Generalist graph anomaly detection: train once on labeled graphs, then
score unseen graphs with a few normal labels (few-shot) or none (zero-shot).
"""

from .align import AlignedFeatures, ProjectionModel, SmoothnessVector, align, fit_projection, smoothness
from .autodiff import AdamState, ParamVector, Tape, optimizer_step
from .encoder import Embeddings, EncoderConfig, encode
from .graph import Graph, NormalizedAdjacency, build_graph, load_graph, normalize_adjacency, propagate, save_graph
from .inject import InjectionSpec, inject
from .metrics import MetricReport, auprc, auroc, report
from .pipeline import embed_graph, score_few_shot
from .scoring import AttentionResult, ContextSplit, ScoreVector, cross_attend, loss, score
from .synth import DomainSpec, acceptance_preset, generate
from .train import Checkpoint, TrainConfig, sample_episode, train
from .zeroshot import ZeroShotConfig, ZeroShotTrace, score_zero_shot

__all__ = [
    "AdamState", "AlignedFeatures", "AttentionResult", "Checkpoint", "ContextSplit",
    "DomainSpec", "Embeddings", "EncoderConfig", "Graph", "InjectionSpec",
    "MetricReport", "NormalizedAdjacency", "ParamVector", "ProjectionModel",
    "ScoreVector", "SmoothnessVector", "Tape", "TrainConfig", "ZeroShotConfig",
    "ZeroShotTrace", "acceptance_preset", "align", "auprc", "auroc", "build_graph",
    "cross_attend", "embed_graph", "encode", "fit_projection", "generate", "inject",
    "load_graph", "loss", "normalize_adjacency", "optimizer_step", "propagate",
    "report", "sample_episode", "save_graph", "score", "score_few_shot",
    "score_zero_shot", "smoothness", "train",
]

__version__ = "0.1.0"
