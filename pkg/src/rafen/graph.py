"""Temporal edge-list graphs and their decomposition into time-window snapshots.

A temporal graph is a multiset of ``(src, dst, timestamp, weight)`` edges over
a dense integer node-id space. Ids are assigned in first-seen order over the
timestamp-sorted edge stream, which makes serialize/parse round-trips exact.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import cached_property
from typing import IO, Iterable

from .errors import ConfigurationError, EmptyGraphError, GraphParseError

# (src_id, dst_id, timestamp, weight)
Edge = tuple[int, int, int, float]


@dataclass(frozen=True)
class TemporalGraph:
    """Timestamped edges plus the label registry that produced the dense ids."""

    labels: tuple[str, ...]
    edges: tuple[Edge, ...]
    directed: bool = False

    def __post_init__(self):
        n = len(self.labels)
        last_ts = None
        for u, v, ts, w in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge endpoint outside id space: ({u}, {v})")
            if ts < 0:
                raise ValueError(f"negative timestamp {ts}")
            if last_ts is not None and ts < last_ts:
                raise ValueError("edges are not sorted by timestamp")
            last_ts = ts

    @cached_property
    def label_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    @property
    def num_nodes(self) -> int:
        return len(self.labels)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def time_span(self) -> tuple[int, int]:
        """(min, max) timestamp; requires at least one edge."""
        if not self.edges:
            raise EmptyGraphError("graph has no edges")
        return self.edges[0][2], self.edges[-1][2]

    def node_id(self, label: str) -> int:
        return self.label_index[label]


def _parse_timestamp(tok: str):
    # accept integers and integral floats ("123" or "123.0"); reject the rest
    try:
        value = int(tok)
    except ValueError:
        try:
            fval = float(tok)
        except ValueError:
            return None
        if not fval.is_integer():
            return None
        value = int(fval)
    return value


def parse_temporal_edgelist(
    stream: IO | Iterable[str],
    *,
    delimiter: str | None = None,
    directed: bool = False,
    has_weight: bool = False,
) -> TemporalGraph:
    """Parse ``src dst timestamp [weight]`` lines into a TemporalGraph.

    Lines starting with ``#`` and blank lines are skipped. ``delimiter=None``
    splits on any whitespace. With ``has_weight`` the fourth field is required
    and parsed as a float; otherwise any fourth field is ignored and every
    edge gets weight 1.0. Self-loops are kept. Raises GraphParseError with the
    offending line number on malformed input and EmptyGraphError when no edge
    survives.
    """
    raw = []
    for line_no, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(delimiter)
        want = 4 if has_weight else 3
        if len(fields) < want:
            raise GraphParseError(line_no, f"expected {want} fields, got {len(fields)}")
        ts = _parse_timestamp(fields[2])
        if ts is None:
            raise GraphParseError(line_no, f"bad timestamp {fields[2]!r}")
        if ts < 0:
            raise GraphParseError(line_no, f"negative timestamp {ts}")
        if has_weight:
            try:
                w = float(fields[3])
            except ValueError:
                raise GraphParseError(line_no, f"bad weight {fields[3]!r}") from None
        else:
            w = 1.0
        raw.append((ts, fields[0], fields[1], w))

    if not raw:
        raise EmptyGraphError("no edges in input")

    raw.sort(key=lambda r: r[0])  # stable: equal timestamps keep file order
    index: dict[str, int] = {}
    labels: list[str] = []
    edges: list[Edge] = []
    for ts, src, dst, w in raw:
        for lab in (src, dst):
            if lab not in index:
                index[lab] = len(labels)
                labels.append(lab)
        edges.append((index[src], index[dst], ts, w))
    return TemporalGraph(labels=tuple(labels), edges=tuple(edges), directed=directed)


def write_temporal_edgelist(graph: TemporalGraph, stream: IO, delimiter: str = " ") -> None:
    """Write edges as ``src dst timestamp weight`` lines in storage order."""
    for u, v, ts, w in graph.edges:
        stream.write(
            f"{graph.labels[u]}{delimiter}{graph.labels[v]}{delimiter}{ts}"
            f"{delimiter}{format(w, '.17g')}\n"
        )


@dataclass(frozen=True)
class Snapshot:
    """Edges of one time window, with adjacency prepared for walk generation."""

    index: int
    time_range: tuple[int, int]  # [start, end)
    directed: bool
    edges: tuple[Edge, ...]

    def __post_init__(self):
        start, end = self.time_range
        for _, _, ts, _ in self.edges:
            if not (start <= ts < end):
                raise ValueError(f"edge timestamp {ts} outside window [{start}, {end})")

    @cached_property
    def nodes(self) -> frozenset[int]:
        out = set()
        for u, v, _, _ in self.edges:
            out.add(u)
            out.add(v)
        return frozenset(out)

    @cached_property
    def sorted_nodes(self) -> tuple[int, ...]:
        return tuple(sorted(self.nodes))

    @cached_property
    def adjacency(self) -> dict[int, tuple[tuple[int, int, float], ...]]:
        """node -> tuple of (neighbor, timestamp, weight); multi-edges repeat.

        Undirected edges contribute one entry per endpoint (self-loops one
        total); directed edges only an out-entry.
        """
        adj: dict[int, list[tuple[int, int, float]]] = {v: [] for v in self.nodes}
        for u, v, ts, w in self.edges:
            adj[u].append((v, ts, w))
            if not self.directed and u != v:
                adj[v].append((u, ts, w))
        return {v: tuple(lst) for v, lst in adj.items()}

    @cached_property
    def neighbor_sets(self) -> dict[int, frozenset[int]]:
        return {v: frozenset(nbr for nbr, _, _ in lst) for v, lst in self.adjacency.items()}

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class SnapshotPlan:
    """How to cut a temporal graph into snapshots.

    frequency: "monthly", "yearly", or a positive integer span in timestamp
    units. drop_leading removes that many windows from the front;
    merge_trailing >= 2 fuses that many trailing windows into one.
    """

    frequency: str | int
    drop_leading: int = 0
    merge_trailing: int = 0

    def __post_init__(self):
        if isinstance(self.frequency, str):
            if self.frequency not in ("monthly", "yearly"):
                raise ConfigurationError(f"unknown frequency {self.frequency!r}")
        elif isinstance(self.frequency, int) and not isinstance(self.frequency, bool):
            if self.frequency <= 0:
                raise ConfigurationError("fixed span must be positive")
        else:
            raise ConfigurationError(f"bad frequency {self.frequency!r}")
        if self.drop_leading < 0:
            raise ConfigurationError("drop_leading must be >= 0")
        if self.merge_trailing not in (0,) and self.merge_trailing < 2:
            raise ConfigurationError("merge_trailing must be 0 or >= 2")


def _month_start(ts: int) -> tuple[int, int]:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    return dt.year, dt.month


def _month_boundary_ts(year: int, month: int) -> int:
    return int(datetime(year, month, 1, tzinfo=timezone.utc).timestamp())


def _calendar_windows(lo: int, hi: int, yearly: bool) -> list[tuple[int, int]]:
    """Contiguous month/year windows covering [lo, hi]; interior ones may be empty."""
    y0, m0 = _month_start(lo)
    y1, m1 = _month_start(hi)
    if yearly:
        m0 = m1 = 1
    bounds = []
    y, m = y0, m0
    while True:
        bounds.append(_month_boundary_ts(y, m))
        if (y, m) >= (y1, m1):
            break
        if yearly:
            y += 1
        else:
            m += 1
            if m > 12:
                y, m = y + 1, 1
    # one boundary past the end closes the final window
    if yearly:
        bounds.append(_month_boundary_ts(y + 1, 1))
    else:
        m += 1
        if m > 12:
            y, m = y + 1, 1
        bounds.append(_month_boundary_ts(y, m))
    return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def _fixed_windows(lo: int, hi: int, span: int) -> list[tuple[int, int]]:
    count = (hi - lo) // span + 1
    return [(lo + k * span, lo + (k + 1) * span) for k in range(count)]


def split_snapshots(graph: TemporalGraph, plan: SnapshotPlan) -> list[Snapshot]:
    """Cut the graph into consecutive snapshots according to the plan.

    The retained windows partition the retained edges: every edge lands in
    exactly one snapshot, ordering within a snapshot follows the input.
    Raises ConfigurationError when fewer than two snapshots remain.
    """
    lo, hi = graph.time_span
    if plan.frequency == "monthly":
        windows = _calendar_windows(lo, hi, yearly=False)
    elif plan.frequency == "yearly":
        windows = _calendar_windows(lo, hi, yearly=True)
    else:
        windows = _fixed_windows(lo, hi, plan.frequency)

    if plan.drop_leading >= len(windows):
        raise ConfigurationError(
            f"drop_leading={plan.drop_leading} leaves no windows (have {len(windows)})"
        )
    windows = windows[plan.drop_leading:]
    if plan.merge_trailing:
        if plan.merge_trailing > len(windows):
            raise ConfigurationError(
                f"merge_trailing={plan.merge_trailing} exceeds window count {len(windows)}"
            )
        merged = (windows[-plan.merge_trailing][0], windows[-1][1])
        windows = windows[: -plan.merge_trailing] + [merged]
    if len(windows) < 2:
        raise ConfigurationError(f"plan yields {len(windows)} snapshot(s); need >= 2")

    starts = [w[0] for w in windows]
    buckets: list[list[Edge]] = [[] for _ in windows]
    for edge in graph.edges:
        ts = edge[2]
        k = bisect.bisect_right(starts, ts) - 1
        if k < 0 or ts >= windows[k][1]:
            continue  # edge fell in a dropped leading window
        buckets[k].append(edge)

    return [
        Snapshot(index=i, time_range=windows[i], directed=graph.directed, edges=tuple(b))
        for i, b in enumerate(buckets)
    ]


def common_nodes(a: Snapshot, b: Snapshot) -> list[int]:
    """Nodes present in both snapshots, ascending id order."""
    return sorted(a.nodes & b.nodes)
