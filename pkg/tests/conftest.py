from __future__ import annotations

import numpy as np
import pytest

from gadgen.graph import build_graph


def ring_graph(n: int, d: int = 2, value: float | None = None, seed: int = 0):
    """Cycle graph; constant features when value is given, random otherwise."""
    edges = np.array([[i, (i + 1) % n] for i in range(n)])
    if value is None:
        rng = np.random.Generator(np.random.PCG64(seed))
        features = rng.standard_normal((n, d))
    else:
        features = np.full((n, d), value)
    return build_graph(n, edges, features, name=f"ring{n}")


def random_graph(n: int, d: int, p: float = 0.3, seed: int = 0, labels: bool = False):
    rng = np.random.Generator(np.random.PCG64(seed))
    ii, jj = np.triu_indices(n, k=1)
    hit = rng.random(ii.size) < p
    edges = np.stack([ii[hit], jj[hit]], axis=1)
    if edges.shape[0] == 0:
        edges = np.array([[0, 1]])
    features = rng.standard_normal((n, d))
    y = None
    if labels:
        y = np.zeros(n, dtype=np.uint8)
        y[rng.choice(n, size=max(1, n // 5), replace=False)] = 1
    return build_graph(n, edges, features, labels=y, name=f"rand{n}x{d}")


def complete_graph(n: int, value: float = 1.0, d: int = 3):
    edges = np.stack(np.triu_indices(n, k=1), axis=1)
    return build_graph(n, edges, np.full((n, d), value), name=f"k{n}")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))
