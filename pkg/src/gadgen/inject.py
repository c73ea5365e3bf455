"""Anomaly injection for manufacturing labeled benchmark graphs.

Two standard mechanisms:
  * structural anomalies: p disjoint groups of q nodes are rewired into
    full cliques,
  * attribute anomalies: a node's feature row is replaced by the row of
    the farthest (Euclidean) of k randomly sampled candidate nodes.

Labels are set to 1 exactly on the p*q + a injected nodes. All randomness
comes from a PCG64 generator seeded from the spec, so outputs are
bit-for-bit reproducible.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InfeasibleSpecError
from .graph import Graph, build_graph


@dataclass(frozen=True)
class InjectionSpec:
    clique_size: int = 15
    clique_count: int = 0
    attribute_count: int = 0
    candidate_pool: int = 50
    seed: int = 0

    def validate(self) -> None:
        if self.clique_size < 2:
            raise InfeasibleSpecError("clique_size must be >= 2")
        if self.clique_count < 0 or self.attribute_count < 0:
            raise InfeasibleSpecError("counts must be non-negative")
        if self.candidate_pool < 2:
            raise InfeasibleSpecError("candidate_pool must be >= 2")

    @property
    def total_injected(self) -> int:
        return self.clique_count * self.clique_size + self.attribute_count

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "InjectionSpec":
        return InjectionSpec(**json.loads(text))


def default_spec(n: int, seed: int = 0) -> InjectionSpec:
    """Convention defaults: q=15 cliques, ~5% of nodes anomalous overall,
    attribute count matching the structural count, pool capped by n."""
    q = 15
    p = max(1, round(0.05 * n / (2 * q)))
    a = p * q
    k = max(2, min(50, n - (p * q + a) - 1))
    return InjectionSpec(clique_size=q, clique_count=p, attribute_count=a,
                         candidate_pool=k, seed=seed)


def inject(g: Graph, spec: InjectionSpec) -> Graph:
    """Return a new labeled Graph with injected anomalies.

    Existing labels on ``g`` are discarded. Injected node sets (clique
    members and attribute targets) are mutually disjoint; attribute
    candidates are drawn from nodes not injected so far, excluding the
    target itself.
    """
    spec.validate()
    n = g.node_count
    if spec.total_injected > n:
        raise InfeasibleSpecError(
            f"cannot inject {spec.total_injected} anomalies into {n} nodes"
        )

    rng = np.random.Generator(np.random.PCG64(spec.seed))
    order = rng.permutation(n)
    pq = spec.clique_count * spec.clique_size
    clique_nodes = order[:pq]
    attr_nodes = order[pq : pq + spec.attribute_count]
    injected = set(int(v) for v in order[: spec.total_injected])

    new_edges = [g.edge_pairs()]
    for c in range(spec.clique_count):
        members = clique_nodes[c * spec.clique_size : (c + 1) * spec.clique_size]
        ii, jj = np.triu_indices(spec.clique_size, k=1)
        new_edges.append(np.stack([members[ii], members[jj]], axis=1))
    edges = np.concatenate(new_edges, axis=0) if new_edges else np.empty((0, 2), np.int64)

    features = g.features.copy()
    eligible = np.array([v for v in range(n) if v not in injected], dtype=np.int64)
    for v in attr_nodes:
        pool = eligible[eligible != v]
        if pool.size < spec.candidate_pool:
            raise InfeasibleSpecError(
                f"only {pool.size} candidate nodes available, need {spec.candidate_pool}"
            )
        cand = rng.choice(pool, size=spec.candidate_pool, replace=False)
        dist = np.linalg.norm(features[cand] - g.features[v], axis=1)
        far = cand[int(np.argmax(dist))]
        features[v] = features[far]

    labels = np.zeros(n, dtype=np.uint8)
    labels[order[: spec.total_injected]] = 1
    return build_graph(n, edges, features, labels=labels, name=g.name)
