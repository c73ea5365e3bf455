from __future__ import annotations

import numpy as np
import pytest

from gadgen.encoder import EncoderConfig, encode
from gadgen.errors import ConfigError, DataError, InsufficientNormalsError
from gadgen.graph import build_graph, normalize_adjacency
from gadgen.inject import InjectionSpec
from gadgen.synth import DomainSpec, generate
from gadgen.train import Checkpoint, TrainConfig, init_params, sample_episode, train

from conftest import random_graph


def labeled_graph(n=40, d=6, seed=0, anomalies=8):
    g = random_graph(n, d, p=0.2, seed=seed)
    rng = np.random.Generator(np.random.PCG64(seed + 100))
    labels = np.zeros(n, dtype=np.uint8)
    labels[rng.choice(n, size=anomalies, replace=False)] = 1
    return build_graph(n, g.edge_pairs(), g.features, labels=labels, name=g.name)


def small_cfg(**kw):
    base = dict(epochs=5, n_k=3, queries_per_class=4, seed=0, unified_dim=6,
                encoder=EncoderConfig(hops=2, hidden=16, mlp_depth=2))
    base.update(kw)
    return TrainConfig(**base)


def test_episode_shapes_and_disjointness():
    g = labeled_graph()
    cfg = small_cfg(n_k=2)
    rng = np.random.Generator(np.random.PCG64(5))
    split, labels = sample_episode(g, cfg, rng)
    assert split.context_ids.size == 2
    assert np.intersect1d(split.context_ids, split.query_ids).size == 0
    assert labels.sum() == labels.size // 2  # balanced classes
    assert np.all(g.labels[split.context_ids] == 0)
    q_labels = g.labels[split.query_ids]
    assert np.array_equal(q_labels, labels)


def test_episode_insufficient_normals():
    n = 10
    labels = np.ones(n, dtype=np.uint8)
    labels[:3] = 0  # exactly n_k normals, no room for normal queries
    g = build_graph(n, np.array([[0, 1]]), np.zeros((n, 2)) + np.arange(n)[:, None],
                    labels=labels)
    cfg = small_cfg(n_k=3)
    rng = np.random.Generator(np.random.PCG64(0))
    with pytest.raises(InsufficientNormalsError):
        sample_episode(g, cfg, rng)


def test_episode_deterministic():
    g = labeled_graph(seed=3)
    cfg = small_cfg()
    a = sample_episode(g, cfg, np.random.Generator(np.random.PCG64(9)))
    b = sample_episode(g, cfg, np.random.Generator(np.random.PCG64(9)))
    assert np.array_equal(a[0].context_ids, b[0].context_ids)
    assert np.array_equal(a[0].query_ids, b[0].query_ids)


def test_zero_epochs_returns_initialization():
    g = labeled_graph(seed=1)
    cfg = small_cfg(epochs=0)
    ck = train([g], cfg)
    expected = init_params(cfg.unified_dim, cfg.encoder, cfg.seed)
    assert np.array_equal(ck.params.data, expected.data)
    assert ck.loss_trace == []


def test_loss_decreases_on_separable_data():
    spec = DomainSpec(name="sep", n=300, raw_dim=24, cluster_count=3,
                      intra_p=0.05, inter_p=0.001, separation=20.0,
                      injection=InjectionSpec(clique_size=6, clique_count=2,
                                              attribute_count=10, candidate_pool=20),
                      seed=5)
    g = generate(spec)
    cfg = TrainConfig(epochs=200, n_k=5, queries_per_class=16, seed=2,
                      unified_dim=16, encoder=EncoderConfig(hops=2, hidden=8))
    ck = train([g], cfg)
    losses = [e["loss"] for e in ck.loss_trace]
    head = np.mean(losses[:20])
    tail = np.mean(losses[-20:])
    assert tail < head


def test_mixed_feature_widths_align_to_unified():
    g1 = labeled_graph(n=30, d=5, seed=4)
    g2 = labeled_graph(n=35, d=11, seed=5)
    cfg = small_cfg(epochs=2, unified_dim=6)
    ck = train([g1, g2], cfg)
    assert len(ck.loss_trace) == 4


def test_param_count_independent_of_dataset_count():
    cfg = small_cfg(epochs=1)
    one = train([labeled_graph(seed=6)], cfg)
    two = train([labeled_graph(seed=6), labeled_graph(seed=7)], cfg)
    assert one.params.size == two.params.size
    assert one.params.layout == two.params.layout


def test_training_deterministic_bitwise():
    datasets = [labeled_graph(seed=8), labeled_graph(seed=9, d=9)]
    cfg = small_cfg(epochs=6, seed=11)
    a = train(datasets, cfg)
    b = train(datasets, cfg)
    assert np.array_equal(a.params.data, b.params.data)
    assert a.loss_trace == b.loss_trace


def test_checkpoint_reload_reproduces_forward(tmp_path):
    g = labeled_graph(seed=10)
    cfg = small_cfg(epochs=3)
    ck = train([g], cfg)
    path = ck.save(tmp_path / "model.gadp")
    loaded = Checkpoint.load(path)
    assert np.array_equal(loaded.params.data, ck.params.data)
    assert loaded.encoder_config() == cfg.encoder
    from gadgen.align import align
    aligned = align(g, cfg.unified_dim)
    adj = normalize_adjacency(g)
    h1 = encode(adj, aligned.matrix, ck.params, cfg.encoder).h_matrix
    h2 = encode(adj, aligned.matrix, loaded.params, loaded.encoder_config()).h_matrix
    assert np.array_equal(h1, h2)


def test_unlabeled_dataset_rejected():
    g = random_graph(20, 4, seed=12)
    with pytest.raises(DataError):
        train([g], small_cfg(epochs=1))


def test_requires_datasets():
    with pytest.raises(ConfigError):
        train([], small_cfg())


def test_log_callback_receives_every_episode():
    g = labeled_graph(seed=13)
    seen = []
    train([g], small_cfg(epochs=4), log=seen.append)
    losses = [e for e in seen if "dataset" in e]
    assert len(losses) == 4
    assert all(e["dataset"] == g.name for e in losses)
