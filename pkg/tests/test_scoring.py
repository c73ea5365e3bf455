from __future__ import annotations

import numpy as np
import pytest

from gadgen.autodiff import ParamVector, Tape
from gadgen.encoder import EncoderConfig
from gadgen.errors import ConfigError, DegenerateEmbeddingError
from gadgen.scoring import ContextSplit, cross_attend, loss, score, score_split
from gadgen.train import init_params


def attn_params(d_e: int, seed: int = 0, zero: bool = False) -> ParamVector:
    hidden = d_e  # single hop so embed_dim == hidden
    pv = init_params(4, EncoderConfig(hops=1, hidden=hidden), seed=seed)
    if zero:
        pv.view("attn.wq")[...] = 0.0
        pv.view("attn.wk")[...] = 0.0
    return pv


def test_single_context_row_reconstructs_exactly():
    rng = np.random.Generator(np.random.PCG64(0))
    h_q = rng.standard_normal((4, 6))
    h_k = rng.standard_normal((1, 6))
    out = cross_attend(h_q, h_k, attn_params(6))
    assert np.array_equal(out.weights, np.ones((4, 1)))
    for row in out.reconstructed:
        assert np.array_equal(row, h_k[0])


def test_zero_projections_give_centroid():
    rng = np.random.Generator(np.random.PCG64(1))
    h_q = rng.standard_normal((5, 4))
    h_k = rng.standard_normal((7, 4))
    out = cross_attend(h_q, h_k, attn_params(4, zero=True))
    assert np.allclose(out.weights, 1.0 / 7.0, atol=1e-15)
    centroid = h_k.mean(axis=0)
    assert np.allclose(out.reconstructed, centroid[None, :], atol=1e-12)


def test_weights_rows_sum_to_one_nonnegative():
    rng = np.random.Generator(np.random.PCG64(2))
    h_q = rng.standard_normal((8, 10)) * 3
    h_k = rng.standard_normal((5, 10)) * 3
    out = cross_attend(h_q, h_k, attn_params(10, seed=3))
    assert np.all(out.weights >= 0)
    assert np.allclose(out.weights.sum(axis=1), 1.0, atol=1e-9)


def test_reconstruction_inside_context_box():
    rng = np.random.Generator(np.random.PCG64(3))
    h_q = rng.standard_normal((6, 5))
    h_k = rng.standard_normal((4, 5))
    for scale in (1.0, 3.5):
        out = cross_attend(h_q, h_k * scale, attn_params(5, seed=4))
        lo = (h_k * scale).min(axis=0) - 1e-12
        hi = (h_k * scale).max(axis=0) + 1e-12
        assert np.all(out.reconstructed >= lo[None, :])
        assert np.all(out.reconstructed <= hi[None, :])


def test_context_permutation_leaves_reconstruction_unchanged():
    rng = np.random.Generator(np.random.PCG64(4))
    h_q = rng.standard_normal((3, 4))
    params = attn_params(4, seed=5)
    # permutation only reorders the weighted sum; the result is exact up
    # to summation reassociation (<= 1 ulp under FMA-enabled BLAS)
    for n_k in (2, 6):
        h_k = rng.standard_normal((n_k, 4))
        perm = rng.permutation(n_k)
        a = cross_attend(h_q, h_k, params).reconstructed
        b = cross_attend(h_q, h_k[perm].copy(), params).reconstructed
        assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


def test_logit_shift_invariance():
    rng = np.random.Generator(np.random.PCG64(5))
    t = Tape()
    x = rng.standard_normal((4, 6))
    s1 = t.softmax_rows(t.constant(x)).value
    s2 = t.softmax_rows(t.constant(x + 55.0)).value
    assert np.allclose(s1, s2, atol=1e-12)


def test_score_zero_when_equal():
    rng = np.random.Generator(np.random.PCG64(6))
    h = rng.standard_normal((5, 7))
    assert np.array_equal(score(h, h), np.zeros(5))


def test_score_single_coordinate():
    h = np.zeros((1, 4))
    r = np.zeros((1, 4))
    r[0, 2] = 3.0
    assert score(h, r)[0] == 3.0


def test_score_matches_sum_oracle():
    rng = np.random.Generator(np.random.PCG64(7))
    h = rng.standard_normal((10, 6))
    r = rng.standard_normal((10, 6))
    expected = np.array([np.sqrt(sum((h[i, j] - r[i, j]) ** 2 for j in range(6)))
                         for i in range(10)])
    assert np.allclose(score(h, r), expected, atol=1e-12)


def test_loss_examples():
    h = np.array([[1.0, 2.0]])
    assert loss(h, h, np.array([0])) == pytest.approx(0.0, abs=1e-12)
    # cos = eps exactly: hinge sits on its boundary
    a = np.array([[1.0, 0.0]])
    b = np.array([[0.5, np.sqrt(3) / 2]])  # cos = 0.5
    assert loss(a, b, np.array([1]), epsilon=0.5) == pytest.approx(0.0, abs=1e-12)
    # cos = 0.9, eps = 0.5 -> 0.4
    c = np.array([[1.0, 0.0]])
    d = np.array([[0.9, np.sqrt(1 - 0.81)]])
    assert loss(c, d, np.array([1]), epsilon=0.5) == pytest.approx(0.4, abs=1e-12)


def test_loss_bounds():
    rng = np.random.Generator(np.random.PCG64(8))
    for _ in range(50):
        a = rng.standard_normal((1, 5))
        b = rng.standard_normal((1, 5))
        l0 = loss(a, b, np.array([0]))
        l1 = loss(a, b, np.array([1]), epsilon=0.25)
        assert 0.0 <= l0 <= 2.0
        assert 0.0 <= l1 <= 1.25 + 1e-15


def test_loss_zero_norm_raises():
    a = np.zeros((1, 3))
    b = np.ones((1, 3))
    with pytest.raises(DegenerateEmbeddingError):
        loss(a, b, np.array([0]))


def test_loss_epsilon_range_enforced():
    h = np.ones((1, 2))
    with pytest.raises(ConfigError):
        loss(h, h, np.array([0]), epsilon=1.0)


def test_loss_tape_matches_plain():
    rng = np.random.Generator(np.random.PCG64(9))
    a = rng.standard_normal((6, 4))
    b = rng.standard_normal((6, 4))
    labels = np.array([0, 1, 0, 1, 0, 1])
    plain = loss(a, b, labels, epsilon=0.2)
    t = Tape()
    node = loss(a, b, labels, epsilon=0.2, tape=t)
    assert float(node.value) == plain


def test_split_rejects_overlap():
    with pytest.raises(ConfigError):
        ContextSplit(context_ids=np.array([1, 2]), query_ids=np.array([2, 3]))
    with pytest.raises(ConfigError):
        ContextSplit(context_ids=np.array([]), query_ids=np.array([1]))


def test_score_split_uses_context_rows():
    rng = np.random.Generator(np.random.PCG64(10))
    h = rng.standard_normal((8, 4))
    params = attn_params(4, seed=6)
    split = ContextSplit(context_ids=np.array([0, 3]), query_ids=np.array([1, 2, 4]))
    attn, raw = score_split(h, split, params)
    direct = cross_attend(h[[1, 2, 4]], h[[0, 3]], params)
    assert np.array_equal(attn.reconstructed, direct.reconstructed)
    assert np.array_equal(raw, score(h[[1, 2, 4]], direct.reconstructed))
