"""Shared helpers for building tiny graphs and snapshots in tests."""

import numpy as np

from rafen.graph import Snapshot, TemporalGraph


def make_snapshot(edges, directed=False, index=0, time_range=None):
    """Snapshot from (u, v, ts[, weight]) tuples."""
    norm = []
    for e in edges:
        if len(e) == 3:
            u, v, ts = e
            w = 1.0
        else:
            u, v, ts, w = e
        norm.append((int(u), int(v), int(ts), float(w)))
    if time_range is None:
        ts_vals = [e[2] for e in norm]
        time_range = (min(ts_vals), max(ts_vals) + 1)
    return Snapshot(index=index, time_range=time_range, directed=directed, edges=tuple(norm))


def make_graph(edges, n_nodes=None, directed=False):
    """TemporalGraph from (u, v, ts[, weight]) tuples with integer labels."""
    norm = []
    for e in edges:
        if len(e) == 3:
            u, v, ts = e
            w = 1.0
        else:
            u, v, ts, w = e
        norm.append((int(u), int(v), int(ts), float(w)))
    norm.sort(key=lambda e: e[2])
    if n_nodes is None:
        n_nodes = 1 + max(max(u, v) for u, v, _, _ in norm)
    labels = tuple(str(i) for i in range(n_nodes))
    return TemporalGraph(labels=labels, edges=tuple(norm), directed=directed)


def random_snapshot(rng, n_nodes=8, n_edges=12, n_times=4, directed=False):
    edges = []
    for _ in range(n_edges):
        u = int(rng.integers(n_nodes))
        v = int(rng.integers(n_nodes))
        if u == v:
            v = (v + 1) % n_nodes
        edges.append((u, v, int(rng.integers(n_times)), 1.0))
    return make_snapshot(edges, directed=directed)
