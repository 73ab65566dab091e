"""Skip-gram-with-negative-sampling training over random-walk corpora.

The trainer owns two matrices (input and context rows) over the snapshot's
nodes, consumes shuffled (center, context) pairs in mini-batches, and
optionally mixes in an alignment regularizer through first-batch loss
scaling. Exported embeddings are the input rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentRegularizer, LossCombiner, LossParts, LossTrace
from .embeddings import EmbeddingMatrix
from .errors import ContractViolationError, EmptyGraphError, TrainingDivergedError
from .graph import Snapshot
from .walks import generate_walks, walk_pairs

_LR_FLOOR = 1e-4
_F32_LIMIT = float(np.finfo(np.float32).max)


@dataclass
class TrainConfig:
    dim: int = 128
    walk_length: int = 80
    walks_per_node: int = 10
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    batch_size: int = 512
    learning_rate: float = 0.025
    p: float = 1.0
    q: float = 1.0
    use_weights: bool = False
    seed: int = 0
    alpha: float | None = None
    batch_restricted: bool = False
    regularizer: AlignmentRegularizer | None = None

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise ContractViolationError("dim, window and negatives must be >= 1")
        if self.epochs < 1 or self.batch_size < 1:
            raise ContractViolationError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0 or self.p <= 0 or self.q <= 0:
            raise ContractViolationError("learning_rate, p and q must be positive")
        if self.walk_length < 2 or self.walks_per_node < 1:
            raise ContractViolationError("walk_length >= 2 and walks_per_node >= 1 required")
        if self.alpha is not None and not (0.0 <= self.alpha <= 1.0):
            raise ContractViolationError(f"alpha must be in [0, 1], got {self.alpha}")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class NegativeSampler:
    """Draws negatives from the walk-corpus unigram distribution ** 0.75."""

    def __init__(self, ids: np.ndarray, counts: np.ndarray, rng: np.random.Generator):
        probs = counts.astype(np.float64) ** 0.75
        self.ids = np.asarray(ids, dtype=np.int64)
        self.cumulative = np.cumsum(probs / probs.sum())
        self.rng = rng

    def draw(self, n: int, k: int) -> np.ndarray:
        idx = np.searchsorted(self.cumulative, self.rng.random((n, k)), side="right")
        return self.ids[np.minimum(idx, len(self.ids) - 1)]


def _sgns_core(rows, ctx, c_pos, x_pos, n_pos):
    """Batch loss and per-example gradients in row-position space."""
    b = len(c_pos)
    vc = rows[c_pos]
    vx = ctx[x_pos]
    vn = ctx[n_pos]
    pos_dot = np.einsum("bd,bd->b", vc, vx)
    neg_dot = np.einsum("bd,bkd->bk", vc, vn)
    loss = float((np.logaddexp(0.0, -pos_dot).sum() + np.logaddexp(0.0, neg_dot).sum()) / b)
    gp = -_sigmoid(-pos_dot)  # d/dz of -log(sigmoid(z))
    gn = _sigmoid(neg_dot)    # d/dz of -log(sigmoid(-z))
    g_vc = (gp[:, None] * vx + np.einsum("bk,bkd->bd", gn, vn)) / b
    g_vx = gp[:, None] * vc / b
    g_vn = gn[:, :, None] * vc[:, None, :] / b
    return loss, g_vc, g_vx, g_vn


def _scatter(positions: np.ndarray, grads: np.ndarray):
    """Sum duplicate positions; returns (unique positions, summed rows)."""
    uniq, inv = np.unique(positions, return_inverse=True)
    acc = np.zeros((len(uniq), grads.shape[-1]))
    np.add.at(acc, inv, grads.reshape(-1, grads.shape[-1]))
    return uniq, acc


def sgns_batch_loss(emb: EmbeddingMatrix, batch: np.ndarray, negatives, k: int = 5):
    """Loss and gradients for one batch of (center, context) node-id pairs.

    ``negatives`` is either a pre-drawn (len(batch), k) array of node ids or a
    NegativeSampler to draw from. Returns (loss, input-row gradient dict,
    context-row gradient dict) keyed by node id; gradients are averages over
    the batch, matching the loss.
    """
    if emb.context_vectors is None:
        raise ContractViolationError("embedding matrix lacks context vectors")
    batch = np.asarray(batch, dtype=np.int64)
    if batch.ndim != 2 or batch.shape[1] != 2 or len(batch) == 0:
        raise ContractViolationError("batch must be a non-empty (n, 2) array")
    if isinstance(negatives, NegativeSampler):
        negatives = negatives.draw(len(batch), k)
    negatives = np.asarray(negatives, dtype=np.int64)
    c_pos = emb.positions(batch[:, 0])
    x_pos = emb.positions(batch[:, 1])
    n_pos = emb.positions(negatives.ravel()).reshape(negatives.shape)
    loss, g_vc, g_vx, g_vn = _sgns_core(emb.vectors, emb.context_vectors, c_pos, x_pos, n_pos)

    iu, ig = _scatter(c_pos, g_vc)
    cat_pos = np.concatenate([x_pos, n_pos.ravel()])
    cat_grad = np.concatenate([g_vx, g_vn.reshape(-1, g_vn.shape[-1])])
    cu, cg = _scatter(cat_pos, cat_grad)
    ids = emb.ids
    input_grads = {int(ids[p]): ig[i] for i, p in enumerate(iu)}
    context_grads = {int(ids[p]): cg[i] for i, p in enumerate(cu)}
    return loss, input_grads, context_grads


def train(
    snap: Snapshot, cfg: TrainConfig, *, init: EmbeddingMatrix | None = None
) -> tuple[EmbeddingMatrix, LossTrace]:
    """Train node2vec embeddings on one snapshot.

    Deterministic given (snapshot, cfg): walk generation, pair shuffling,
    negative draws and initialization all come from one seeded generator.
    ``init`` warm-starts input rows of nodes shared with a previous matrix.
    A configured regularizer must cover only snapshot nodes and match dim;
    its loss joins the model loss through first-batch scaling.
    """
    nodes = snap.sorted_nodes
    if not nodes:
        raise EmptyGraphError(f"snapshot {snap.index} has no edges")
    rng = np.random.default_rng(cfg.seed)
    walks = generate_walks(
        snap,
        walks_per_node=cfg.walks_per_node,
        walk_length=cfg.walk_length,
        p=cfg.p,
        q=cfg.q,
        use_weights=cfg.use_weights,
        rng=rng,
    )
    pairs = walk_pairs(walks, cfg.window)
    if len(pairs) == 0:
        raise ContractViolationError("walks produced no training pairs")

    corpus = np.concatenate([np.asarray(w, dtype=np.int64) for w in walks])
    cand_ids, cand_counts = np.unique(corpus, return_counts=True)
    sampler = NegativeSampler(cand_ids, cand_counts, rng)

    ids = np.array(nodes, dtype=np.int64)
    n, d = len(ids), cfg.dim
    rows = (rng.random((n, d)) - 0.5) / d
    ctx = np.zeros((n, d))
    if init is not None:
        if init.dim != d:
            raise ContractViolationError("warm-start dimension mismatch")
        shared = [v for v in nodes if v in init]
        if shared:
            rows[np.searchsorted(ids, shared)] = init.rows_for(shared)

    reg = cfg.regularizer
    combiner = None
    if reg is not None:
        if reg.dim != d:
            raise ContractViolationError(
                f"anchor dimension {reg.dim} != training dimension {d}"
            )
        node_set = snap.nodes
        missing = [v for v in reg.nodes if v not in node_set]
        if missing:
            raise ContractViolationError(
                f"alignment nodes absent from snapshot: {missing[:5]}"
            )
        reg.bind(lambda v: int(np.searchsorted(ids, v)))
        combiner = LossCombiner(cfg.alpha)

    # map pair/negative node ids to row positions once
    pair_pos = np.searchsorted(ids, pairs)
    n_batches = math.ceil(len(pairs) / cfg.batch_size)
    total_steps = cfg.epochs * n_batches
    trace = LossTrace()
    step = 0
    for _ in range(cfg.epochs):
        perm = rng.permutation(len(pairs))
        for b in range(n_batches):
            sel = perm[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            c_pos = pair_pos[sel, 0]
            x_pos = pair_pos[sel, 1]
            neg_ids = sampler.draw(len(sel), cfg.negatives)
            n_pos = np.searchsorted(ids, neg_ids)
            lr = cfg.learning_rate * max(1.0 - step / total_steps, _LR_FLOOR)

            m_loss, g_vc, g_vx, g_vn = _sgns_core(rows, ctx, c_pos, x_pos, n_pos)
            if not math.isfinite(m_loss):
                raise TrainingDivergedError(step, "model")
            iu, ig = _scatter(c_pos, g_vc)
            cu, cg = _scatter(
                np.concatenate([x_pos, n_pos.ravel()]),
                np.concatenate([g_vx, g_vn.reshape(-1, d)]),
            )

            if reg is not None:
                batch_positions = np.unique(c_pos) if cfg.batch_restricted else None
                a_loss, a_pos, a_grads = reg.evaluate(rows, batch_positions)
                if not math.isfinite(a_loss):
                    raise TrainingDivergedError(step, "alignment")
                parts = combiner.combine(m_loss, a_loss)
                cm, ca = combiner.coefficients()
                rows[iu] -= lr * cm * ig
                ctx[cu] -= lr * cm * cg
                if len(a_pos):
                    rows[a_pos] -= lr * ca * a_grads
            else:
                parts = LossParts(
                    model=m_loss,
                    alignment=0.0,
                    combined=m_loss,
                    scale_model=1.0,
                    scale_alignment=1.0,
                )
                rows[iu] -= lr * ig
                ctx[cu] -= lr * cg
            trace.append(step, parts)
            step += 1
        # embeddings serialize as float32; past its range they would hit
        # disk as inf, so that counts as divergence (NaN max compares False)
        if not (np.abs(rows).max() <= _F32_LIMIT and np.abs(ctx).max() <= _F32_LIMIT):
            raise TrainingDivergedError(step, "parameters")

    return EmbeddingMatrix(ids, rows, ctx), trace
