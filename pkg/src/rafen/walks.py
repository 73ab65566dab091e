"""Second-order biased random walks over a snapshot (node2vec-style)."""

from __future__ import annotations

import numpy as np

from .graph import Snapshot


def generate_walks(
    snap: Snapshot,
    *,
    walks_per_node: int = 10,
    walk_length: int = 80,
    p: float = 1.0,
    q: float = 1.0,
    use_weights: bool = False,
    rng: np.random.Generator | None = None,
    seed: int = 0,
) -> list[list[int]]:
    """Run ``walks_per_node`` rounds of biased walks from every node.

    Within a round nodes are visited in ascending id order, so the corpus is a
    pure function of the snapshot and the seed. The second step onward uses
    the return parameter ``p`` (revisit the previous node), 1 for neighbors of
    the previous node, and the in-out parameter ``q`` otherwise; multi-edges
    contribute multiplicity and, with ``use_weights``, their weight. Walks
    stop early at nodes without outgoing edges.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    adjacency = snap.adjacency
    neighbor_sets = None
    unbiased = p == 1.0 and q == 1.0 and not use_weights
    if not unbiased:
        neighbor_sets = snap.neighbor_sets

    walks = []
    nodes = snap.sorted_nodes
    for _ in range(walks_per_node):
        for start in nodes:
            walk = [start]
            while len(walk) < walk_length:
                cur = walk[-1]
                nbrs = adjacency.get(cur, ())
                if not nbrs:
                    break
                if unbiased:
                    walk.append(nbrs[int(rng.integers(len(nbrs)))][0])
                    continue
                weights = np.empty(len(nbrs))
                if len(walk) == 1:
                    for i, (nbr, _, w) in enumerate(nbrs):
                        weights[i] = w if use_weights else 1.0
                else:
                    prev = walk[-2]
                    prev_nbrs = neighbor_sets[prev]
                    for i, (nbr, _, w) in enumerate(nbrs):
                        base = w if use_weights else 1.0
                        if nbr == prev:
                            base /= p
                        elif nbr not in prev_nbrs:
                            base /= q
                        weights[i] = base
                cum = np.cumsum(weights)
                pick = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
                walk.append(nbrs[min(pick, len(nbrs) - 1)][0])
            walks.append(walk)
    return walks


def walk_pairs(walks: list[list[int]], window: int) -> np.ndarray:
    """(center, context) pairs within a fixed window, as an (N, 2) array."""
    centers, contexts = [], []
    for walk in walks:
        L = len(walk)
        for i, c in enumerate(walk):
            lo = max(0, i - window)
            hi = min(L, i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    centers.append(c)
                    contexts.append(walk[j])
    if not centers:
        return np.empty((0, 2), dtype=np.int64)
    return np.stack(
        [np.array(centers, dtype=np.int64), np.array(contexts, dtype=np.int64)], axis=1
    )
