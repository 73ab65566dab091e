"""Synthetic temporal graphs for experiments and tests."""

from __future__ import annotations

import numpy as np

from .graph import TemporalGraph


def two_community_temporal_graph(
    n_nodes: int,
    n_snapshots: int,
    *,
    p_in: float,
    p_out: float,
    churn: float = 0.0,
    seed: int = 0,
) -> tuple[TemporalGraph, list[np.ndarray]]:
    """Stochastic block model with two drifting communities.

    Nodes split evenly into two blocks; per snapshot every unordered pair is
    an edge with probability p_in (same block) or p_out (different blocks),
    and a ``churn`` fraction of nodes then swaps block before the next
    snapshot. Edge timestamps equal the snapshot index, so a fixed-span plan
    with span 1 recovers exactly these snapshots. Returns the graph and the
    per-snapshot block assignment arrays.
    """
    if n_nodes < 4 or n_snapshots < 1:
        raise ValueError("need n_nodes >= 4 and n_snapshots >= 1")
    rng = np.random.default_rng(seed)
    blocks = np.zeros(n_nodes, dtype=np.int64)
    blocks[n_nodes // 2 :] = 1

    iu, ju = np.triu_indices(n_nodes, k=1)
    edges = []
    memberships = []
    for t in range(n_snapshots):
        memberships.append(blocks.copy())
        same = blocks[iu] == blocks[ju]
        probs = np.where(same, p_in, p_out)
        mask = rng.random(len(iu)) < probs
        for u, v in zip(iu[mask], ju[mask]):
            edges.append((int(u), int(v), t, 1.0))
        if churn > 0.0 and t + 1 < n_snapshots:
            n_switch = int(round(churn * n_nodes))
            if n_switch:
                switch = rng.choice(n_nodes, size=n_switch, replace=False)
                blocks = blocks.copy()
                blocks[switch] = 1 - blocks[switch]

    labels = tuple(str(i) for i in range(n_nodes))
    return TemporalGraph(labels=labels, edges=tuple(edges), directed=False), memberships
