"""Dense reverse-mode differentiation sized for this model family.

A Tape records primitive ops (matmul, add-bias, relu, softmax-rows,
scale, subtract, concat-cols, row-l2, row-cosine, margin-hinge, mean)
while the forward pass runs, then replays them in exact reverse order to
produce gradients w.r.t. every registered parameter. Gradients accumulate
additively at fan-out. Everything is float64 so the finite-difference
checker can be held to tight tolerances.

Parameters live in a ParamVector: one flat float64 vector plus a registry
mapping named blocks (e.g. "mlp.layer0.w", "attn.wq") to slices.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    DegenerateEmbeddingError,
    DimensionMismatchError,
    FormatError,
    NumericError,
)

PARAM_MAGIC = b"GADP"
PARAM_VERSION = 1


class ParamVector:
    """Flat float64 parameter storage with a named-block registry."""

    def __init__(self, layout: list[tuple[str, tuple[int, ...]]], data: np.ndarray | None = None):
        self.layout = [(name, tuple(shape)) for name, shape in layout]
        self._slices: dict[str, tuple[int, tuple[int, ...]]] = {}
        offset = 0
        for name, shape in self.layout:
            size = int(np.prod(shape)) if shape else 1
            self._slices[name] = (offset, shape)
            offset += size
        self.size = offset
        if data is None:
            self.data = np.zeros(self.size, dtype=np.float64)
        else:
            data = np.asarray(data, dtype=np.float64)
            if data.shape != (self.size,):
                raise DimensionMismatchError(
                    f"flat data has {data.shape}, layout needs ({self.size},)"
                )
            self.data = data.copy()

    def view(self, name: str) -> np.ndarray:
        offset, shape = self._slices[name]
        size = int(np.prod(shape)) if shape else 1
        return self.data[offset : offset + size].reshape(shape)

    def names(self) -> list[str]:
        return [name for name, _ in self.layout]

    def copy(self) -> "ParamVector":
        return ParamVector(self.layout, self.data)

    def zeros_like(self) -> "ParamVector":
        return ParamVector(self.layout)

    def same_layout(self, other: "ParamVector") -> bool:
        return self.layout == other.layout


def save_params(pv: ParamVector, path: str | Path, meta: dict | None = None) -> Path:
    """Write the byte-reproducible "GADP" checkpoint format."""
    parts = [PARAM_MAGIC, struct.pack("<I", PARAM_VERSION),
             struct.pack("<I", len(pv.layout))]
    for name, shape in pv.layout:
        nb = name.encode("utf-8")
        parts.append(struct.pack("<I", len(nb)))
        parts.append(nb)
        parts.append(struct.pack("<I", len(shape)))
        parts.append(struct.pack(f"<{len(shape)}Q", *shape) if shape else b"")
    parts.append(np.ascontiguousarray(pv.data, dtype="<f8").tobytes())
    blob = json.dumps(meta or {}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts.append(struct.pack("<Q", len(blob)))
    parts.append(blob)
    path = Path(path)
    path.write_bytes(b"".join(parts))
    return path


def load_params(path: str | Path) -> tuple[ParamVector, dict]:
    buf = Path(path).read_bytes()
    if buf[:4] != PARAM_MAGIC:
        raise FormatError(f"{path}: not a GADP checkpoint (bad magic)")
    pos = 4
    (version,) = struct.unpack_from("<I", buf, pos); pos += 4
    if version != PARAM_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    (count,) = struct.unpack_from("<I", buf, pos); pos += 4
    layout: list[tuple[str, tuple[int, ...]]] = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", buf, pos); pos += 4
        name = buf[pos : pos + name_len].decode("utf-8"); pos += name_len
        (ndim,) = struct.unpack_from("<I", buf, pos); pos += 4
        shape = struct.unpack_from(f"<{ndim}Q", buf, pos); pos += 8 * ndim
        layout.append((name, tuple(int(s) for s in shape)))
    total = sum(int(np.prod(s)) if s else 1 for _, s in layout)
    data = np.frombuffer(buf, dtype="<f8", count=total, offset=pos).copy(); pos += 8 * total
    (meta_len,) = struct.unpack_from("<Q", buf, pos); pos += 8
    meta = json.loads(buf[pos : pos + meta_len].decode("utf-8"))
    return ParamVector(layout, data), meta


# ---------------------------------------------------------------------------
# tape
# ---------------------------------------------------------------------------

class Node:
    __slots__ = ("value", "parents", "vjps", "grad", "op")

    def __init__(self, value: np.ndarray, parents: tuple, vjps: tuple, op: str):
        self.value = value
        self.parents = parents
        self.vjps = vjps
        self.grad: np.ndarray | None = None
        self.op = op

    @property
    def shape(self):
        return self.value.shape


def _finite(value: np.ndarray, op: str) -> np.ndarray:
    if not np.isfinite(value).all():
        raise NumericError(f"non-finite result in op {op!r}")
    return value


class Tape:
    """Single-owner record of one forward pass; replay gives gradients."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.param_nodes: dict[str, Node] = {}

    def _push(self, value, parents, vjps, op) -> Node:
        node = Node(np.asarray(value, dtype=np.float64), parents, vjps, op)
        _finite(node.value, op)
        self.nodes.append(node)
        return node

    def param(self, pv: ParamVector, name: str) -> Node:
        if name in self.param_nodes:
            return self.param_nodes[name]
        node = self._push(pv.view(name).copy(), (), (), f"param:{name}")
        self.param_nodes[name] = node
        return node

    def constant(self, value: np.ndarray) -> Node:
        return self._push(value, (), (), "constant")

    # -- primitives ---------------------------------------------------------

    def matmul(self, a: Node, b: Node, transpose_b: bool = False) -> Node:
        bv = b.value.T if transpose_b else b.value
        if a.value.shape[1] != bv.shape[0]:
            raise DimensionMismatchError(f"matmul {a.shape} x {b.shape}")
        out = a.value @ bv
        if transpose_b:
            vjps = (lambda g: g @ b.value, lambda g: g.T @ a.value)
        else:
            vjps = (lambda g: g @ b.value.T, lambda g: a.value.T @ g)
        return self._push(out, (a, b), vjps, "matmul")

    def add_bias(self, x: Node, b: Node) -> Node:
        if x.value.shape[1] != b.value.shape[0]:
            raise DimensionMismatchError(f"add_bias {x.shape} + {b.shape}")
        return self._push(x.value + b.value[None, :], (x, b),
                          (lambda g: g, lambda g: g.sum(axis=0)), "add_bias")

    def relu(self, x: Node) -> Node:
        mask = x.value > 0
        return self._push(np.where(mask, x.value, 0.0), (x,),
                          (lambda g: g * mask,), "relu")

    def softmax_rows(self, x: Node) -> Node:
        shifted = x.value - x.value.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        s = e / e.sum(axis=1, keepdims=True)

        def vjp(g, s=s):
            return s * (g - (g * s).sum(axis=1, keepdims=True))

        return self._push(s, (x,), (vjp,), "softmax_rows")

    def scale(self, x: Node, c: float) -> Node:
        return self._push(x.value * c, (x,), (lambda g: g * c,), "scale")

    def subtract(self, a: Node, b: Node) -> Node:
        if a.value.shape != b.value.shape:
            raise DimensionMismatchError(f"subtract {a.shape} - {b.shape}")
        return self._push(a.value - b.value, (a, b),
                          (lambda g: g, lambda g: -g), "subtract")

    def concat_cols(self, parts: list[Node]) -> Node:
        widths = [p.value.shape[1] for p in parts]
        splits = np.cumsum(widths)[:-1]
        vjps = []
        for i in range(len(parts)):
            lo = 0 if i == 0 else splits[i - 1]
            hi = splits[i] if i < len(splits) else None
            vjps.append(lambda g, lo=lo, hi=hi: g[:, lo:hi])
        return self._push(np.concatenate([p.value for p in parts], axis=1),
                          tuple(parts), tuple(vjps), "concat_cols")

    def row_l2(self, x: Node) -> Node:
        norms = np.linalg.norm(x.value, axis=1)

        def vjp(g, x=x, norms=norms):
            safe = np.where(norms > 0, norms, 1.0)
            return (g / safe)[:, None] * x.value

        return self._push(norms, (x,), (vjp,), "row_l2")

    def row_cosine(self, a: Node, b: Node) -> Node:
        na = np.linalg.norm(a.value, axis=1)
        nb = np.linalg.norm(b.value, axis=1)
        if (na == 0).any() or (nb == 0).any():
            row = int(np.argmax((na == 0) | (nb == 0)))
            raise DegenerateEmbeddingError(f"zero-norm embedding row {row} in cosine")
        dot = (a.value * b.value).sum(axis=1)
        cos = dot / (na * nb)

        def vjp_a(g):
            return g[:, None] * (b.value / (na * nb)[:, None]
                                 - (cos / na**2)[:, None] * a.value)

        def vjp_b(g):
            return g[:, None] * (a.value / (na * nb)[:, None]
                                 - (cos / nb**2)[:, None] * b.value)

        return self._push(cos, (a, b), (vjp_a, vjp_b), "row_cosine")

    def margin_hinge(self, cos: Node, labels: np.ndarray, epsilon: float) -> Node:
        """Per-sample loss: label 0 -> 1 - cos; label 1 -> max(0, cos - eps)."""
        y = np.asarray(labels)
        normal = y == 0
        out = np.where(normal, 1.0 - cos.value, np.maximum(0.0, cos.value - epsilon))
        active = (~normal) & (cos.value > epsilon)

        def vjp(g):
            d = np.where(normal, -1.0, 0.0)
            d = np.where(active, 1.0, d)
            return g * d

        return self._push(out, (cos,), (vjp,), "margin_hinge")

    def mean(self, x: Node) -> Node:
        size = x.value.size
        return self._push(np.asarray(x.value.mean()), (x,),
                          (lambda g: np.full(x.value.shape, float(g) / size),), "mean")

    # -- reverse pass -------------------------------------------------------

    def backward(self, pv: ParamVector, loss_grad: float = 1.0) -> ParamVector:
        """Gradient of the final scalar node w.r.t. every registered param."""
        if not self.nodes:
            raise NumericError("empty tape")
        last = self.nodes[-1]
        if last.value.ndim != 0:
            raise NumericError(f"tape ends in shape {last.shape}, expected scalar loss")
        last.grad = np.asarray(float(loss_grad))
        for node in reversed(self.nodes):
            if node.grad is None:
                continue
            for parent, vjp in zip(node.parents, node.vjps):
                g = vjp(node.grad)
                if parent.grad is None:
                    parent.grad = np.asarray(g, dtype=np.float64).copy()
                else:
                    parent.grad = parent.grad + g
        grads = pv.zeros_like()
        for name, node in self.param_nodes.items():
            if node.grad is not None:
                grads.view(name)[...] = node.grad
        return grads


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @staticmethod
    def for_params(pv: ParamVector) -> "AdamState":
        return AdamState(m=np.zeros(pv.size), v=np.zeros(pv.size))


def optimizer_step(
    params: ParamVector,
    grads: ParamVector,
    state: AdamState,
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> ParamVector:
    """One Adam update; mutates ``state``, returns the new parameters."""
    if not params.same_layout(grads):
        raise DimensionMismatchError("params and grads have different layouts")
    state.t += 1
    g = grads.data
    state.m = beta1 * state.m + (1.0 - beta1) * g
    state.v = beta2 * state.v + (1.0 - beta2) * g * g
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    new = params.copy()
    new.data -= learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    return new


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------

def finite_difference_gradient(
    loss_fn: Callable[[ParamVector], float],
    pv: ParamVector,
    step: float = 1e-5,
) -> ParamVector:
    """Central finite differences of ``loss_fn`` at ``pv``, every coordinate."""
    out = pv.zeros_like()
    work = pv.copy()
    for i in range(pv.size):
        orig = work.data[i]
        work.data[i] = orig + step
        up = loss_fn(work)
        work.data[i] = orig - step
        down = loss_fn(work)
        work.data[i] = orig
        out.data[i] = (up - down) / (2.0 * step)
    return out


def max_relative_error(a: ParamVector, b: ParamVector, floor: float = 1e-6) -> float:
    """max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)."""
    denom = np.maximum(np.maximum(np.abs(a.data), np.abs(b.data)), floor)
    return float(np.max(np.abs(a.data - b.data) / denom))
