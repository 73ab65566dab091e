"""Combining per-snapshot embeddings into a single matrix.

Four strategies over an ordered list of (already mutually aligned) snapshot
embeddings: per-node mean, last occurrence, exponential-style recursive
blending with a fixed rate (fildne), and the same recursion with per-step
rates estimated from link-prediction quality on validation edges (kfildne).
Every strategy covers the union of input node sets. A node absent from one
operand of a blend step takes the other operand's row verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import ContractViolationError, SingleClassError
from .linkpred import auc, hadamard_features, train_logistic

_AUC_EPS = 1e-6


@dataclass(frozen=True)
class AggregationSpec:
    method: str  # mean | last | fildne | kfildne
    fildne_alpha: float = 0.5

    def __post_init__(self):
        if self.method not in ("mean", "last", "fildne", "kfildne"):
            raise ContractViolationError(f"unknown aggregation method {self.method!r}")
        if not (0.0 <= self.fildne_alpha <= 1.0):
            raise ContractViolationError(
                f"fildne_alpha must be in [0, 1], got {self.fildne_alpha}"
            )


def _check_inputs(embeddings: list[EmbeddingMatrix]) -> int:
    if not embeddings:
        raise ContractViolationError("aggregation needs at least one matrix")
    dims = {e.dim for e in embeddings}
    if len(dims) != 1:
        raise ContractViolationError(f"mixed embedding dimensions: {sorted(dims)}")
    return dims.pop()


def _mean(embeddings: list[EmbeddingMatrix]) -> EmbeddingMatrix:
    d = embeddings[0].dim
    sums: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for emb in embeddings:
        for nid, vec in zip(emb.ids, emb.vectors):
            nid = int(nid)
            if nid in sums:
                sums[nid] = sums[nid] + vec
                counts[nid] += 1
            else:
                sums[nid] = vec.copy()
                counts[nid] = 1
    ids = sorted(sums)
    out = np.empty((len(ids), d))
    for i, nid in enumerate(ids):
        out[i] = sums[nid] / counts[nid]
    return EmbeddingMatrix(ids, out)


def _last(embeddings: list[EmbeddingMatrix]) -> EmbeddingMatrix:
    rows: dict[int, np.ndarray] = {}
    for emb in embeddings:
        for nid, vec in zip(emb.ids, emb.vectors):
            rows[int(nid)] = vec
    return EmbeddingMatrix.from_rows(rows)


def _blend(embeddings: list[EmbeddingMatrix], alphas: list[float]) -> EmbeddingMatrix:
    """C_1 = F_1; C_t = (1 - a_t) * C_{t-1} + a_t * F_t on shared nodes."""
    state: dict[int, np.ndarray] = {
        int(nid): vec.copy() for nid, vec in zip(embeddings[0].ids, embeddings[0].vectors)
    }
    for emb, a in zip(embeddings[1:], alphas):
        for nid, vec in zip(emb.ids, emb.vectors):
            nid = int(nid)
            if nid in state:
                state[nid] = (1.0 - a) * state[nid] + a * vec
            else:
                state[nid] = vec.copy()
    return EmbeddingMatrix.from_rows(state)


def fildne_unrolled_weights(alphas: list[float]) -> np.ndarray:
    """Per-snapshot weights the blend recursion assigns to full-coverage nodes.

    For T snapshots there are T-1 alphas; the weights are
    w_1 = prod(1 - a_j), w_t = a_t * prod_{j>t}(1 - a_j), and sum to 1.
    """
    T = len(alphas) + 1
    w = np.empty(T)
    w[0] = 1.0
    for a in alphas:
        w[0] *= 1.0 - a
    for t, a in enumerate(alphas, start=1):
        x = a
        for later in alphas[t:]:
            x *= 1.0 - later
        w[t] = x
    return w


def _kfildne_alpha(prev_auc_score: float, cur_auc_score: float) -> float:
    a_prev = max(prev_auc_score - 0.5, _AUC_EPS)
    a_cur = max(cur_auc_score - 0.5, _AUC_EPS)
    return a_cur / (a_prev + a_cur)


def _val_auc(emb: EmbeddingMatrix, pairs: np.ndarray, labels: np.ndarray) -> float:
    """In-sample link-prediction AUC of one matrix on the validation edges.

    Pairs with an endpoint missing from the matrix are skipped; degenerate
    inputs (nothing left, or one class) fall back to the chance value 0.5.
    """
    keep = [i for i, (u, v) in enumerate(pairs) if int(u) in emb and int(v) in emb]
    if not keep:
        return 0.5
    x = hadamard_features(emb, pairs[keep])
    y = labels[keep]
    if len(np.unique(y)) < 2:
        return 0.5
    try:
        model = train_logistic(x, y)
    except SingleClassError:
        return 0.5
    return auc(model.decision(x), y)


def aggregate(
    embeddings: list[EmbeddingMatrix],
    spec: AggregationSpec,
    val_edges: tuple[np.ndarray, np.ndarray] | None = None,
) -> EmbeddingMatrix:
    """Aggregate snapshot embeddings (oldest first) into one matrix.

    kfildne requires ``val_edges`` as (pairs, labels): each blend step rates
    the running state against the next snapshot's matrix by validation AUC
    and sets the step's blend rate to cur / (prev + cur) on the AUC excess
    over chance (floored at 1e-6, so all-chance inputs still complete).
    """
    _check_inputs(embeddings)
    if spec.method == "mean":
        return _mean(embeddings)
    if spec.method == "last":
        return _last(embeddings)
    if len(embeddings) == 1:
        return _last(embeddings)
    if spec.method == "fildne":
        return _blend(embeddings, [spec.fildne_alpha] * (len(embeddings) - 1))
    # kfildne
    if val_edges is None:
        raise ContractViolationError("kfildne needs validation edges")
    pairs, labels = val_edges
    pairs = np.asarray(pairs, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    state = embeddings[0]
    for emb in embeddings[1:]:
        a = _kfildne_alpha(_val_auc(state, pairs, labels), _val_auc(emb, pairs, labels))
        state = _blend([state, emb], [a])
    return state
