"""Node-activity scores between consecutive snapshots, and reference selection.

Two scoring routes exist for weighting or restricting the alignment loss:
edge-Jaccard neighborhood stability, and change in temporal-betweenness
centrality. Both map the common nodes of a snapshot pair into [0, 1], where
high means "stable anchor candidate".
"""

from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError
from .graph import Snapshot


@dataclass(frozen=True)
class ScoreMap:
    """Per-node scores in [0, 1] produced by one scoring method."""

    method: str
    scores: dict[int, float] = field(compare=False)

    def __post_init__(self):
        for v, s in self.scores.items():
            if not (0.0 <= s <= 1.0) or not math.isfinite(s):
                raise ValueError(f"score for node {v} outside [0, 1]: {s}")

    def __len__(self):
        return len(self.scores)

    def __getitem__(self, node_id: int) -> float:
        return self.scores[node_id]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("node_id,score\n")
            for v in sorted(self.scores):
                fh.write(f"{v},{format(self.scores[v], '.17g')}\n")

    @classmethod
    def from_csv(cls, path, method: str = "file") -> "ScoreMap":
        scores = {}
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "node_id,score":
                raise ValueError("not a score CSV: bad header")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                tok = line.split(",")
                scores[int(tok[0])] = float(tok[1])
        return cls(method=method, scores=scores)


@dataclass(frozen=True)
class ReferenceSet:
    """Top-scored nodes kept for the restricted alignment loss."""

    nodes: tuple[int, ...]
    fraction: float


def _check_common(prev: Snapshot, cur: Snapshot, common) -> list[int]:
    common = sorted(common)
    for v in common:
        if v not in prev.nodes or v not in cur.nodes:
            raise ContractViolationError(f"node {v} not present in both snapshots")
    return common


def edge_jaccard_scores(prev: Snapshot, cur: Snapshot, common) -> ScoreMap:
    """Jaccard overlap of a node's neighbor sets across the two snapshots."""
    common = _check_common(prev, cur, common)
    np_sets, nc_sets = prev.neighbor_sets, cur.neighbor_sets
    scores = {}
    for v in common:
        a, b = np_sets[v], nc_sets[v]
        scores[v] = len(a & b) / len(a | b)
    return ScoreMap(method="edge_jaccard", scores=scores)


def _time_adjacency(snap: Snapshot) -> dict[int, list[tuple[int, int]]]:
    # deduplicated time-edges per node, sorted by timestamp: node -> [(t, nbr)]
    out = {}
    for v, lst in snap.adjacency.items():
        out[v] = sorted({(ts, nbr) for nbr, ts, _ in lst})
    return out


def _source_dependencies(source: int, adj_times) -> dict[int, float]:
    """Brandes-style dependency of one source over the temporal-state DAG.

    States are (node, arrival_time); a state expands along incident
    time-edges with timestamp >= arrival_time, so every path respects time.
    Hop-minimal temporal walks never revisit a node (a revisit could be cut,
    keeping time order), so per-state path counts sum to simple-path counts.
    """
    init = (source, -1)
    dist = {init: 0}
    sigma = {init: 1.0}
    preds: dict[tuple[int, int], list] = {}
    order = [init]
    frontier = [init]
    d = 1
    while frontier:
        nxt = []
        for st in frontier:
            u, tau = st
            su = sigma[st]
            lst = adj_times[u]
            for j in range(bisect.bisect_left(lst, (tau, -1)), len(lst)):
                t, x = lst[j]
                st2 = (x, t)
                dx = dist.get(st2)
                if dx is None:
                    dist[st2] = d
                    sigma[st2] = su
                    preds[st2] = [st]
                    nxt.append(st2)
                    order.append(st2)
                elif dx == d:
                    sigma[st2] += su
                    preds[st2].append(st)
                # earlier-layer states never gain shortest predecessors
        frontier = nxt
        d += 1

    # earliest-arrival-irrelevant: a node's temporal distance is the smallest
    # state layer over its states; shortest-path count sums those states
    d_node: dict[int, int] = {}
    for (v, _), dv in dist.items():
        if v == source:
            continue
        if v not in d_node or dv < d_node[v]:
            d_node[v] = dv
    sigma_node = {v: 0.0 for v in d_node}
    for (v, t), dv in dist.items():
        if v != source and dv == d_node[v]:
            sigma_node[v] += sigma[(v, t)]

    delta = {st: 0.0 for st in order}
    for st in reversed(order):  # reverse BFS order = reverse topological
        v, _ = st
        if v == source:
            continue
        fc = sigma[st] / sigma_node[v] if dist[st] == d_node[v] else 0.0
        coef = (fc + delta[st]) / sigma[st]
        for pr in preds[st]:
            delta[pr] += sigma[pr] * coef

    dep: dict[int, float] = defaultdict(float)
    for (v, _), val in delta.items():
        if v != source:
            dep[v] += val
    return dep


def temporal_betweenness(
    snap: Snapshot,
    *,
    node_budget: int = 20000,
    sample_sources: int = 256,
    seed: int = 0,
) -> dict[int, float]:
    """Betweenness over shortest time-respecting paths, ordered-pair normalized.

    Paths are hop-minimal walks whose edge timestamps never decrease; path
    multiplicity is counted over distinct (node, neighbor, timestamp) edges.
    Values are divided by (n-1)(n-2), keeping them in [0, 1]. Above
    ``node_budget`` nodes, dependencies are estimated from ``sample_sources``
    random pivots and rescaled, trading exactness for tractability.
    """
    nodes = sorted(snap.nodes)
    n = len(nodes)
    if n < 3:
        return {v: 0.0 for v in nodes}
    adj_times = _time_adjacency(snap)

    if n > node_budget:
        rng = np.random.default_rng(seed)
        sources = [nodes[i] for i in rng.choice(n, size=min(sample_sources, n), replace=False)]
        scale = n / len(sources)
    else:
        sources, scale = nodes, 1.0

    acc = {v: 0.0 for v in nodes}
    for s in sources:
        for v, val in _source_dependencies(s, adj_times).items():
            acc[v] += val
    norm = (n - 1) * (n - 2)
    return {v: scale * acc[v] / norm for v in nodes}


def minmax_normalize(values: dict[int, float]) -> dict[int, float]:
    """Scale a score dict into [0, 1]; constant maps collapse to all zeros."""
    if not values:
        return {}
    vals = list(values.values())
    lo, hi = min(vals), max(vals)
    if hi == lo:
        return {v: 0.0 for v in values}
    span = hi - lo
    return {v: (x - lo) / span for v, x in values.items()}


def temporal_betweenness_scores(
    prev: Snapshot,
    cur: Snapshot,
    common,
    *,
    node_budget: int = 20000,
    sample_sources: int = 256,
    seed: int = 0,
) -> ScoreMap:
    """Stability score 1 - |TB_cur(v) - TB_prev(v)| on per-snapshot
    min-max-normalized temporal betweenness, clamped into [0, 1]."""
    common = _check_common(prev, cur, common)
    kw = dict(node_budget=node_budget, sample_sources=sample_sources, seed=seed)
    tb_prev = minmax_normalize(temporal_betweenness(prev, **kw))
    tb_cur = minmax_normalize(temporal_betweenness(cur, **kw))
    scores = {}
    for v in common:
        s = 1.0 - abs(tb_cur[v] - tb_prev[v])
        scores[v] = min(1.0, max(0.0, s))
    return ScoreMap(method="temporal_betweenness", scores=scores)


def select_top_percent(scores: ScoreMap | dict[int, float], p: float) -> ReferenceSet:
    """Keep the ceil(p * n) highest-scored nodes; ties at the cutoff break
    toward smaller node id. p must lie in (0, 1]."""
    if not (0.0 < p <= 1.0):
        raise ContractViolationError(f"p must be in (0, 1], got {p}")
    mapping = scores.scores if isinstance(scores, ScoreMap) else scores
    if not mapping:
        raise ContractViolationError("cannot select from an empty score map")
    ranked = sorted(mapping.items(), key=lambda kv: (-kv[1], kv[0]))
    k = math.ceil(p * len(ranked))
    chosen = sorted(v for v, _ in ranked[:k])
    return ReferenceSet(nodes=tuple(chosen), fraction=p)
