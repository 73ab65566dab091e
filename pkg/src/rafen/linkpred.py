"""Link-prediction dataset construction, features, classifier, and AUC.

The evaluation target is always "predict edges of the final snapshot among
nodes seen in earlier snapshots": positives are deduplicated target edges
with both endpoints seen, negatives are an equal number of uniformly sampled
seen-node pairs that avoid target edges, self-loops and duplicates, and the
example pool is split 60/20/20 per class. The classifier is a fixed-form
L2-regularized logistic regression fitted by deterministic full-batch
gradient descent, so every source of evaluation variance lives in the
embeddings, never in this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import (
    ContractViolationError,
    NegativeSamplingError,
    SingleClassError,
)
from .graph import Snapshot


def _canonical(u: int, v: int, directed: bool) -> tuple[int, int]:
    if directed or u <= v:
        return (u, v)
    return (v, u)


def sample_negative_pairs(
    candidates: np.ndarray,
    forbidden: set[tuple[int, int]],
    count: int,
    rng: np.random.Generator,
    *,
    directed: bool,
    budget_factor: int = 50,
) -> list[tuple[int, int]]:
    """Uniform candidate pairs avoiding self-loops, ``forbidden`` and repeats.

    Rejection sampling with a total draw budget of ``budget_factor * count``;
    exceeding it raises NegativeSamplingError (e.g. near-complete graphs).
    """
    if count == 0:
        return []
    if len(candidates) < 2:
        raise NegativeSamplingError("need at least two candidate nodes")
    budget = budget_factor * count
    out: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    draws = 0
    while len(out) < count and draws < budget:
        chunk = min(budget - draws, max(count, 256))
        us = candidates[rng.integers(0, len(candidates), size=chunk)]
        vs = candidates[rng.integers(0, len(candidates), size=chunk)]
        draws += chunk
        for u, v in zip(us, vs):
            u, v = int(u), int(v)
            if u == v:
                continue
            pair = _canonical(u, v, directed)
            if pair in forbidden or pair in seen:
                continue
            seen.add(pair)
            out.append(pair)
            if len(out) == count:
                break
    if len(out) < count:
        raise NegativeSamplingError(
            f"drew {draws} pairs but only {len(out)}/{count} usable negatives"
        )
    return out


@dataclass(frozen=True)
class LinkPredDataset:
    """Balanced labeled pairs with per-class 60/20/20 splits.

    Examples are indexed 0..2n-1: positives first, then negatives.
    """

    positives: tuple[tuple[int, int], ...]
    negatives: tuple[tuple[int, int], ...]
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    directed: bool

    def __len__(self):
        return len(self.positives) + len(self.negatives)

    def pairs(self) -> np.ndarray:
        return np.array(list(self.positives) + list(self.negatives), dtype=np.int64)

    def labels(self) -> np.ndarray:
        return np.concatenate(
            [np.ones(len(self.positives), dtype=np.int64),
             np.zeros(len(self.negatives), dtype=np.int64)]
        )

    def pairs_for(self, idx: np.ndarray) -> np.ndarray:
        return self.pairs()[idx]

    def labels_for(self, idx: np.ndarray) -> np.ndarray:
        return self.labels()[idx]


def _split_class(count: int, offset: int, rng: np.random.Generator):
    perm = rng.permutation(count) + offset
    n_tr = 6 * count // 10
    n_val = 2 * count // 10
    return perm[:n_tr], perm[n_tr : n_tr + n_val], perm[n_tr + n_val :]


def build_dataset(
    target: Snapshot,
    seen_nodes,
    seed: int,
    *,
    budget_factor: int = 50,
) -> LinkPredDataset:
    """Build the evaluation dataset for one target snapshot.

    ``seen_nodes`` are the nodes observable before the target window (the
    candidate pool for both classes). All randomness comes from ``seed``.
    """
    seen = sorted(set(int(v) for v in seen_nodes))
    seen_set = set(seen)
    directed = target.directed

    target_pairs = {_canonical(u, v, directed) for u, v, _, _ in target.edges}
    positives = sorted(
        {
            _canonical(u, v, directed)
            for u, v, _, _ in target.edges
            if u in seen_set and v in seen_set
        }
    )
    if not positives:
        raise ContractViolationError("no target edge has both endpoints previously seen")

    rng = np.random.default_rng(seed)
    negatives = sample_negative_pairs(
        np.array(seen, dtype=np.int64),
        target_pairs,
        len(positives),
        rng,
        directed=directed,
        budget_factor=budget_factor,
    )

    pos_tr, pos_val, pos_te = _split_class(len(positives), 0, rng)
    neg_tr, neg_val, neg_te = _split_class(len(negatives), len(positives), rng)
    return LinkPredDataset(
        positives=tuple(positives),
        negatives=tuple(negatives),
        train_idx=np.sort(np.concatenate([pos_tr, neg_tr])),
        val_idx=np.sort(np.concatenate([pos_val, neg_val])),
        test_idx=np.sort(np.concatenate([pos_te, neg_te])),
        seed=seed,
        directed=directed,
    )


def hadamard_features(emb: EmbeddingMatrix, pairs) -> np.ndarray:
    """Element-wise product of the two endpoint embeddings per pair."""
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ContractViolationError("pairs must be an (n, 2) array")
    return emb.rows_for(pairs[:, 0]) * emb.rows_for(pairs[:, 1])


@dataclass(frozen=True)
class LogisticConfig:
    C: float = 1.0
    tol: float = 1e-6
    max_iter: int = 1000


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    config: LogisticConfig = field(default_factory=LogisticConfig)
    n_iter: int = 0
    converged: bool = False

    def decision(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights + self.bias

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return _stable_sigmoid(self.decision(features))


def train_logistic(
    features: np.ndarray, labels: np.ndarray, config: LogisticConfig | None = None
) -> LogisticModel:
    """Minimize C * sum log(1 + exp(-y~ z)) + 0.5 ||w||^2 (bias unpenalized).

    Full-batch gradient descent with Armijo backtracking line search, run
    until the gradient infinity-norm drops below tol or max_iter steps. No
    randomness: identical data always yields the identical model.
    """
    cfg = config or LogisticConfig()
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or len(x) != len(y):
        raise ContractViolationError("features/labels shape mismatch")
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClassError(f"labels contain a single class: {classes.tolist()}")
    if not set(classes.tolist()) <= {0, 1}:
        raise ContractViolationError(f"labels must be 0/1, got {classes.tolist()}")

    n, d = x.shape
    w = np.zeros(d)
    b = 0.0

    def objective(wv, bv):
        margins = (2.0 * y - 1.0) * (x @ wv + bv)
        return cfg.C * np.logaddexp(0.0, -margins).sum() + 0.5 * float(wv @ wv)

    obj = objective(w, b)
    eta = 1.0
    it = 0
    converged = False
    while it < cfg.max_iter:
        p = _stable_sigmoid(x @ w + b)
        resid = p - y
        gw = cfg.C * (x.T @ resid) + w
        gb = cfg.C * float(resid.sum())
        gnorm = max(float(np.abs(gw).max()), abs(gb))
        if gnorm < cfg.tol:
            converged = True
            break
        gsq = float(gw @ gw) + gb * gb
        eta = min(eta * 2.0, 1e6)
        while True:
            w_new = w - eta * gw
            b_new = b - eta * gb
            obj_new = objective(w_new, b_new)
            if obj_new <= obj - 1e-4 * eta * gsq or eta < 1e-20:
                break
            eta *= 0.5
        w, b, obj = w_new, b_new, obj_new
        it += 1

    return LogisticModel(weights=w, bias=b, config=cfg, n_iter=it, converged=converged)


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-sum ROC AUC with average ranks on tied scores."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ContractViolationError("scores/labels must be matching 1-d arrays")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    s_sorted = scores[order]
    _, starts, counts = np.unique(s_sorted, return_index=True, return_counts=True)
    group_rank = starts + (counts + 1) / 2.0  # average 1-based rank per tie group
    ranks_sorted = np.repeat(group_rank, counts)
    ranks = np.empty(len(scores))
    ranks[order] = ranks_sorted
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
