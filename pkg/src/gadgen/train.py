"""Multi-dataset generalist training.

One model is optimized over a collection of labeled graphs, round-robin,
one sampled episode per graph per epoch. An episode draws n_k normal
context nodes plus a balanced normal/anomalous query batch, runs
align -> encode -> cross-attend -> margin cosine loss, and applies one
Adam step. Alignment and feature propagation are parameter-free, so both
are computed once per dataset and cached for the whole run.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .align import ALIGN_MODES, align
from .autodiff import AdamState, ParamVector, Tape, load_params, optimizer_step, save_params
from .encoder import EncoderConfig, encode_rows_tape, param_layout, propagation_stack
from .errors import (
    ConfigError,
    DataError,
    InsufficientAnomaliesError,
    InsufficientNormalsError,
    NumericError,
)
from .graph import Graph, normalize_adjacency
from .scoring import ContextSplit, cross_attend, loss as margin_loss


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-3
    n_k: int = 10
    queries_per_class: int = 64
    epsilon: float = 0.0
    seed: int = 0
    eval_every: int = 50
    unified_dim: int = 64
    align_mode: str = "smoothness"
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    datasets: tuple[str, ...] = ()

    def __post_init__(self):
        if self.epochs < 0 or self.n_k < 1 or self.queries_per_class < 1:
            raise ConfigError("epochs >= 0, n_k >= 1, queries_per_class >= 1 required")
        if self.align_mode not in ALIGN_MODES:
            raise ConfigError(f"unknown align_mode {self.align_mode!r}")

    def echo(self) -> dict:
        d = asdict(self)
        d["datasets"] = list(self.datasets)
        return d


@dataclass
class Checkpoint:
    params: ParamVector
    config: dict
    epoch: int
    loss_trace: list[dict]

    def save(self, path: str | Path) -> Path:
        meta = {"config": self.config, "epoch": self.epoch, "loss_trace": self.loss_trace}
        return save_params(self.params, path, meta)

    @staticmethod
    def load(path: str | Path) -> "Checkpoint":
        params, meta = load_params(path)
        return Checkpoint(params=params, config=meta.get("config", {}),
                          epoch=int(meta.get("epoch", 0)),
                          loss_trace=list(meta.get("loss_trace", [])))

    def encoder_config(self) -> EncoderConfig:
        enc = self.config.get("encoder", {})
        return EncoderConfig(**enc) if enc else EncoderConfig()

    @property
    def unified_dim(self) -> int:
        return int(self.config.get("unified_dim", 64))

    @property
    def align_mode(self) -> str:
        return str(self.config.get("align_mode", "smoothness"))


def init_params(input_dim: int, cfg: EncoderConfig, seed: int) -> ParamVector:
    """Kaiming-style uniform fan-in init for weights, zeros for biases."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x1A17])))
    pv = ParamVector(param_layout(input_dim, cfg))
    for name, shape in pv.layout:
        if name.endswith(".b"):
            continue
        bound = np.sqrt(6.0 / shape[0])
        pv.view(name)[...] = rng.uniform(-bound, bound, size=shape)
    return pv


def _class_indices(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    if g.labels is None:
        raise DataError(f"training graph {g.name!r} has no labels")
    normals = np.flatnonzero(g.labels == 0)
    anomalies = np.flatnonzero(g.labels == 1)
    if normals.size == 0 or anomalies.size == 0:
        raise DataError(f"training graph {g.name!r} must contain both classes")
    return normals, anomalies


def sample_episode(
    g: Graph, cfg: TrainConfig, rng: np.random.Generator
) -> tuple[ContextSplit, np.ndarray]:
    """Draw disjoint context (normal) and balanced query sets for one step."""
    normals, anomalies = _class_indices(g)
    if normals.size < cfg.n_k + 1:
        raise InsufficientNormalsError(
            f"{g.name!r}: {normals.size} normals cannot cover n_k={cfg.n_k} context "
            "plus at least one query"
        )
    per_class = min(cfg.queries_per_class, normals.size - cfg.n_k, anomalies.size)
    if per_class < 1:
        raise InsufficientAnomaliesError(f"{g.name!r}: no anomalies available for queries")

    context = rng.choice(normals, size=cfg.n_k, replace=False)
    remaining = np.setdiff1d(normals, context)
    q_norm = rng.choice(remaining, size=per_class, replace=False)
    q_anom = rng.choice(anomalies, size=per_class, replace=False)
    split = ContextSplit(context_ids=np.sort(context),
                         query_ids=np.concatenate([q_norm, q_anom]))
    labels = np.concatenate([np.zeros(per_class, np.int64), np.ones(per_class, np.int64)])
    return split, labels


def train(
    datasets: list[Graph],
    cfg: TrainConfig,
    log: Callable[[dict], None] | None = None,
) -> Checkpoint:
    """Optimize one parameter set across all training graphs."""
    if not datasets:
        raise ConfigError("need at least one training dataset")
    for g in datasets:
        _class_indices(g)

    # dataset-specific, parameter-free preprocessing, done once
    stacks = []
    for i, g in enumerate(datasets):
        aligned = align(g, cfg.unified_dim, mode=cfg.align_mode,
                        seed=int(np.random.SeedSequence([cfg.seed, 0xA116, i]).generate_state(1)[0]))
        stacks.append(propagation_stack(normalize_adjacency(g), aligned.matrix, cfg.encoder.hops))

    params = init_params(cfg.unified_dim, cfg.encoder, cfg.seed)
    adam = AdamState.for_params(params)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 0xE715])))
    trace: list[dict] = []

    for epoch in range(cfg.epochs):
        epoch_losses = []
        for i, g in enumerate(datasets):
            split, qlabels = sample_episode(g, cfg, rng)
            tape = Tape()
            h_q = encode_rows_tape(tape, stacks[i], split.query_ids, params, cfg.encoder)
            h_k = encode_rows_tape(tape, stacks[i], split.context_ids, params, cfg.encoder)
            attn = cross_attend(h_q, h_k, params, tape)
            loss_node = margin_loss(h_q, attn.nodes[1], qlabels, cfg.epsilon, tape)
            loss_value = float(loss_node.value)
            if not np.isfinite(loss_value):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, dataset {g.name!r}, "
                    f"param norm {np.linalg.norm(params.data):.3e}"
                )
            grads = tape.backward(params)
            params = optimizer_step(params, grads, adam, learning_rate=cfg.learning_rate)
            entry = {"epoch": epoch, "dataset": g.name, "loss": loss_value}
            trace.append(entry)
            epoch_losses.append(loss_value)
            if log:
                log(entry)
        if log and cfg.eval_every > 0 and (epoch + 1) % cfg.eval_every == 0:
            log({"epoch": epoch, "mean_loss": float(np.mean(epoch_losses))})

    return Checkpoint(params=params, config=cfg.echo(), epoch=cfg.epochs, loss_trace=trace)


def log_jsonl(entry: dict) -> None:
    print(json.dumps(entry, sort_keys=True))
