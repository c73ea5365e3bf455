from __future__ import annotations

import numpy as np
import pytest

from gadgen.autodiff import (
    AdamState,
    ParamVector,
    Tape,
    finite_difference_gradient,
    load_params,
    max_relative_error,
    optimizer_step,
    save_params,
)
from gadgen.errors import DegenerateEmbeddingError, NumericError


def small_params(seed=0, blocks=(("a", (3, 3)), ("b", (3,)))):
    pv = ParamVector(list(blocks))
    rng = np.random.Generator(np.random.PCG64(seed))
    pv.data[...] = rng.standard_normal(pv.size)
    return pv


# -- param vector -------------------------------------------------------------

def test_pack_unpack_identity():
    pv = small_params()
    flat = pv.data.copy()
    again = ParamVector(pv.layout, flat)
    assert np.array_equal(again.data, pv.data)
    assert again.view("a").shape == (3, 3)
    again.view("a")[0, 0] = 42.0
    assert again.data[0] == 42.0  # views alias the flat vector


def test_checkpoint_bytes_roundtrip(tmp_path):
    pv = small_params(seed=5)
    meta = {"epoch": 3, "note": "x"}
    p1 = save_params(pv, tmp_path / "a.gadp", meta)
    loaded, meta2 = load_params(p1)
    assert meta2 == meta
    assert loaded.layout == pv.layout
    assert np.array_equal(loaded.data, pv.data)
    p2 = save_params(loaded, tmp_path / "b.gadp", meta2)
    assert p1.read_bytes() == p2.read_bytes()


# -- forward primitives -------------------------------------------------------

def test_softmax_uniform_on_equal_row():
    t = Tape()
    out = t.softmax_rows(t.constant(np.full((1, 5), 3.7)))
    assert np.array_equal(out.value, np.full((1, 5), 0.2))


def test_softmax_rows_sum_and_shift_invariance():
    rng = np.random.Generator(np.random.PCG64(8))
    x = rng.standard_normal((6, 9)) * 10
    t = Tape()
    s = t.softmax_rows(t.constant(x)).value
    assert np.allclose(s.sum(axis=1), 1.0, atol=1e-12)
    shifted = t.softmax_rows(t.constant(x + 123.456)).value
    assert np.allclose(s, shifted, atol=1e-12)


def test_relu_on_negative_matrix():
    t = Tape()
    out = t.relu(t.constant(-np.ones((3, 4))))
    assert np.array_equal(out.value, np.zeros((3, 4)))


def test_matmul_matches_triple_loop():
    rng = np.random.Generator(np.random.PCG64(3))
    a = rng.standard_normal((2, 3))
    b = rng.standard_normal((3, 2))
    expected = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(3):
                expected[i, j] += a[i, k] * b[k, j]
    t = Tape()
    out = t.matmul(t.constant(a), t.constant(b))
    assert np.allclose(out.value, expected, atol=1e-14)


def test_nonfinite_result_raises():
    t = Tape()
    big = t.constant(np.full((2, 2), 1e308))
    with np.errstate(over="ignore"), pytest.raises(NumericError):
        t.matmul(big, big)


def test_cosine_zero_norm_raises():
    t = Tape()
    a = t.constant(np.array([[1.0, 0.0], [0.0, 0.0]]))
    b = t.constant(np.ones((2, 2)))
    with pytest.raises(DegenerateEmbeddingError):
        t.row_cosine(a, b)


# -- backward -----------------------------------------------------------------

def test_mean_gradient_is_uniform():
    pv = ParamVector([("w", (4,))])
    pv.data[...] = [1.0, 2.0, 3.0, 4.0]
    t = Tape()
    node = t.param(pv, "w")
    # mean over a (1,4) view of the parameters
    loss = t.mean(t.add_bias(t.constant(np.zeros((1, 4))), node))
    grads = t.backward(pv)
    assert np.allclose(grads.view("w"), 0.25)


def test_hinge_inactive_region_zero_gradient():
    pv = ParamVector([("w", (2, 2))])
    pv.data[...] = [0.4, 0.0, 0.0, 0.4]
    t = Tape()
    w = t.param(pv, "w")
    h = t.matmul(t.constant(np.array([[1.0, 0.5]])), w)
    target = t.constant(np.array([[-1.0, -0.25]]))  # cos(h, target) = -1 <= eps
    cos = t.row_cosine(h, target)
    loss = t.mean(t.margin_hinge(cos, np.array([1]), 0.0))
    assert loss.value == 0.0
    grads = t.backward(pv)
    assert np.array_equal(grads.view("w"), np.zeros((2, 2)))


def test_backward_requires_scalar_tail():
    pv = ParamVector([("w", (2, 2))])
    t = Tape()
    t.param(pv, "w")
    with pytest.raises(NumericError):
        t.backward(pv)


def test_fanout_accumulates():
    pv = ParamVector([("w", (1, 3))])
    pv.data[...] = [1.0, -2.0, 0.5]
    t = Tape()
    w = t.param(pv, "w")
    # loss = mean(w - (-w)) = mean(2w): two paths into the same leaf
    neg = t.scale(w, -1.0)
    loss = t.mean(t.subtract(w, neg))
    grads = t.backward(pv)
    assert np.allclose(grads.view("w"), 2.0 / 3.0)


def _composite_loss(pv: ParamVector, labels: np.ndarray, eps: float) -> float:
    x_q = np.array([[0.2, -0.4], [1.1, 0.3], [-0.7, 0.9]])
    x_k = np.array([[0.5, 0.5], [-0.2, 0.8]])
    t = Tape()
    w = t.param(pv, "w")
    bias = t.param(pv, "b")
    wq = t.param(pv, "wq")
    hq = t.relu(t.add_bias(t.matmul(t.constant(x_q), w), bias))
    hk = t.relu(t.add_bias(t.matmul(t.constant(x_k), w), bias))
    q = t.matmul(hq, wq)
    weights = t.softmax_rows(t.scale(t.matmul(q, hk, transpose_b=True), 0.5))
    recon = t.matmul(weights, hk)
    cos = t.row_cosine(hq, recon)
    loss_node = t.mean(t.margin_hinge(cos, labels, eps))
    return t, loss_node


def test_composite_gradient_matches_finite_differences():
    layout = [("w", (2, 2)), ("b", (2,)), ("wq", (2, 2))]
    pv = ParamVector(layout)
    rng = np.random.Generator(np.random.PCG64(17))
    pv.data[...] = rng.uniform(0.2, 1.0, pv.size)  # keep relu active, norms nonzero
    labels = np.array([0, 1, 0])

    tape, _ = _composite_loss(pv, labels, 0.1)
    analytic = tape.backward(pv)

    def f(p):
        t, node = _composite_loss(p, labels, 0.1)
        return float(node.value)

    numeric = finite_difference_gradient(f, pv, step=1e-6)
    assert max_relative_error(analytic, numeric) <= 1e-6


# -- optimizer ----------------------------------------------------------------

def test_adam_zero_gradient_keeps_params():
    pv = small_params(seed=1)
    state = AdamState.for_params(pv)
    out = optimizer_step(pv, pv.zeros_like(), state)
    assert np.array_equal(out.data, pv.data)


def test_adam_first_step_is_signed_lr():
    pv = ParamVector([("w", (3,))])
    pv.data[...] = [1.0, 1.0, 1.0]
    grads = ParamVector([("w", (3,))])
    grads.data[...] = [0.5, -2.0, 1e-12]
    state = AdamState.for_params(pv)
    out = optimizer_step(pv, grads, state, learning_rate=0.01)
    # bias-corrected first step: -lr * g / (|g| + eps) ~ -lr * sign(g)
    step = out.data - pv.data
    assert np.allclose(step[:2], [-0.01, 0.01], atol=1e-6)
    assert abs(step[2]) < 0.01  # eps dampens near-zero gradients


def test_adam_constant_gradient_approaches_lr_steps():
    pv = ParamVector([("w", (1,))])
    grads = ParamVector([("w", (1,))])
    grads.data[...] = [0.3]
    state = AdamState.for_params(pv)
    current = pv
    steps = []
    for _ in range(200):
        nxt = optimizer_step(current, grads, state, learning_rate=0.05)
        steps.append(current.data[0] - nxt.data[0])
        current = nxt
    # m_hat / sqrt(v_hat) -> 1 for a constant gradient
    assert np.isclose(steps[-1], 0.05, rtol=1e-3)


def test_adam_deterministic():
    pv = small_params(seed=2)
    g = small_params(seed=3)
    s1, s2 = AdamState.for_params(pv), AdamState.for_params(pv)
    a = optimizer_step(pv, g, s1, learning_rate=0.02)
    b = optimizer_step(pv, g, s2, learning_rate=0.02)
    assert np.array_equal(a.data, b.data)
