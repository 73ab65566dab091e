"""In-training alignment losses against an anchor embedding.

Three variants penalize squared drift of the current snapshot's embedding
from the previous snapshot's (anchor) embedding:

  all:      mean over the common nodes of ||F_cur(v) - F_anchor(v)||^2
  weighted: the same, each node scaled by its activity score normalized to
            mean 1 over the common set
  ref:      the unweighted mean restricted to a selected reference subset

The combined training objective is (1 - alpha) * L_model + alpha * L_align
on losses scaled by their first-batch magnitudes; with alpha unset the two
scaled terms are simply summed, which matches alpha = 0.5 up to a factor 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import ContractViolationError, DegenerateWeightsError
from .scoring import ReferenceSet, ScoreMap

_SCALE_FLOOR = 1e-12


def _loss_core(cur_rows, anchor_rows, weights, normalizer):
    """Weighted mean squared row difference and its gradient on cur_rows.

    The unweighted variants pass an exact all-ones weight vector, so their
    arithmetic is bit-identical to the weighted path (x * 1.0 == x).
    """
    diff = cur_rows - anchor_rows
    per_node = (diff * diff).sum(axis=1)
    loss = float((per_node * weights).sum() / normalizer)
    grads = (2.0 / normalizer) * weights[:, None] * diff
    return loss, grads


def _common_sorted(common) -> list[int]:
    common = sorted(set(common))
    if not common:
        raise ContractViolationError("alignment requires a non-empty common node set")
    return common


def normalized_weights(scores: ScoreMap | dict[int, float], common) -> np.ndarray:
    """Scores over the common set scaled to mean 1, in ascending node order.

    A constant score map yields an exact all-ones vector (s / mean(s) would
    reintroduce rounding noise); an all-zero map cannot be normalized.
    """
    mapping = scores.scores if isinstance(scores, ScoreMap) else scores
    try:
        arr = np.array([mapping[v] for v in common], dtype=np.float64)
    except KeyError as exc:
        raise ContractViolationError(f"score map missing common node {exc.args[0]}") from None
    if np.all(arr == arr[0]):
        if arr[0] == 0.0:
            raise DegenerateWeightsError("all scores are zero; weights undefined")
        return np.ones(len(arr), dtype=np.float64)
    mean = float(arr.mean())
    if mean <= 0.0:
        raise DegenerateWeightsError("score mean is not positive; weights undefined")
    return arr / mean


def alignment_loss_all(
    cur: EmbeddingMatrix, anchor: EmbeddingMatrix, common
) -> tuple[float, dict[int, np.ndarray]]:
    """Mean squared difference over the common nodes."""
    common = _common_sorted(common)
    weights = np.ones(len(common), dtype=np.float64)
    loss, grads = _loss_core(cur.rows_for(common), anchor.rows_for(common), weights, len(common))
    return loss, {v: grads[i] for i, v in enumerate(common)}


def alignment_loss_weighted(
    cur: EmbeddingMatrix,
    anchor: EmbeddingMatrix,
    common,
    scores: ScoreMap | dict[int, float],
) -> tuple[float, dict[int, np.ndarray]]:
    """Activity-weighted mean squared difference over the common nodes."""
    common = _common_sorted(common)
    weights = normalized_weights(scores, common)
    loss, grads = _loss_core(cur.rows_for(common), anchor.rows_for(common), weights, len(common))
    return loss, {v: grads[i] for i, v in enumerate(common)}


def alignment_loss_ref(
    cur: EmbeddingMatrix,
    anchor: EmbeddingMatrix,
    common,
    ref: ReferenceSet,
) -> tuple[float, dict[int, np.ndarray]]:
    """Mean squared difference restricted to the reference subset."""
    common = set(_common_sorted(common))
    nodes = sorted(ref.nodes)
    if not nodes:
        raise ContractViolationError("reference set is empty")
    outside = [v for v in nodes if v not in common]
    if outside:
        raise ContractViolationError(f"reference nodes outside common set: {outside[:5]}")
    weights = np.ones(len(nodes), dtype=np.float64)
    loss, grads = _loss_core(cur.rows_for(nodes), anchor.rows_for(nodes), weights, len(nodes))
    return loss, {v: grads[i] for i, v in enumerate(nodes)}


@dataclass(frozen=True)
class LossParts:
    """One batch's loss decomposition, raw and under first-batch scaling."""

    model: float
    alignment: float
    combined: float
    scale_model: float
    scale_alignment: float

    @property
    def model_scaled(self) -> float:
        return self.model / self.scale_model

    @property
    def alignment_scaled(self) -> float:
        return self.alignment / self.scale_alignment


class LossCombiner:
    """Mixes model and alignment losses after first-batch magnitude scaling.

    The first combine() call records |model| and |alignment| as fixed scale
    constants (values below 1e-12 are replaced by 1.0); every batch, including
    the first, is then reported as combined = (1-alpha) * model/scale_model +
    alpha * alignment/scale_alignment, or the plain sum of the two scaled
    terms when alpha is None. Scales are constants with respect to the
    parameters, so gradient mixing uses coefficients() unchanged all run.
    """

    def __init__(self, alpha: float | None = None):
        if alpha is not None and not (0.0 <= alpha <= 1.0):
            raise ContractViolationError(f"alpha must be in [0, 1], got {alpha}")
        self.alpha = alpha
        self.scale_model: float | None = None
        self.scale_alignment: float | None = None

    @staticmethod
    def _guard(value: float) -> float:
        mag = abs(value)
        return 1.0 if mag < _SCALE_FLOOR else mag

    def combine(self, model_loss: float, alignment_loss: float) -> LossParts:
        if self.scale_model is None:
            self.scale_model = self._guard(model_loss)
            self.scale_alignment = self._guard(alignment_loss)
        m = model_loss / self.scale_model
        a = alignment_loss / self.scale_alignment
        if self.alpha is None:
            combined = m + a
        else:
            combined = (1.0 - self.alpha) * m + self.alpha * a
        return LossParts(
            model=model_loss,
            alignment=alignment_loss,
            combined=combined,
            scale_model=self.scale_model,
            scale_alignment=self.scale_alignment,
        )

    def coefficients(self) -> tuple[float, float]:
        """(model, alignment) multipliers for gradient mixing."""
        if self.scale_model is None:
            raise ContractViolationError("coefficients requested before the first batch")
        if self.alpha is None:
            return 1.0 / self.scale_model, 1.0 / self.scale_alignment
        return (1.0 - self.alpha) / self.scale_model, self.alpha / self.scale_alignment


@dataclass
class LossTrace:
    """Per-batch loss records; exports the standard trace CSV."""

    rows: list[tuple[int, LossParts]] = field(default_factory=list)

    def append(self, batch: int, parts: LossParts) -> None:
        self.rows.append((batch, parts))

    def __len__(self):
        return len(self.rows)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("batch,model_raw,alignment_raw,model_scaled,alignment_scaled,combined\n")
            for batch, p in self.rows:
                fh.write(
                    f"{batch},{format(p.model, '.17g')},{format(p.alignment, '.17g')},"
                    f"{format(p.model_scaled, '.17g')},{format(p.alignment_scaled, '.17g')},"
                    f"{format(p.combined, '.17g')}\n"
                )


class AlignmentRegularizer:
    """Training hook evaluating one alignment-loss variant against an anchor.

    Built once per snapshot transition, then bound to the row layout of the
    matrix under training. evaluate() returns the raw loss together with the
    touched row positions and the loss gradient on those rows; scaling and
    mixing stay with the LossCombiner.
    """

    def __init__(self, kind: str, nodes, weights: np.ndarray, anchor_rows: np.ndarray, dim: int):
        self.kind = kind
        self.nodes = tuple(nodes)
        self.weights = weights
        self.anchor_rows = anchor_rows
        self.dim = dim
        self._positions: np.ndarray | None = None

    @classmethod
    def all_nodes(cls, anchor: EmbeddingMatrix, common) -> "AlignmentRegularizer":
        common = _common_sorted(common)
        return cls(
            "all", common, np.ones(len(common)), anchor.rows_for(common), anchor.dim
        )

    @classmethod
    def weighted(
        cls, anchor: EmbeddingMatrix, common, scores: ScoreMap | dict[int, float]
    ) -> "AlignmentRegularizer":
        common = _common_sorted(common)
        return cls(
            "weighted",
            common,
            normalized_weights(scores, common),
            anchor.rows_for(common),
            anchor.dim,
        )

    @classmethod
    def restricted(
        cls, anchor: EmbeddingMatrix, common, ref: ReferenceSet
    ) -> "AlignmentRegularizer":
        common_set = set(_common_sorted(common))
        nodes = sorted(ref.nodes)
        if not nodes:
            raise ContractViolationError("reference set is empty")
        if any(v not in common_set for v in nodes):
            raise ContractViolationError("reference nodes must lie in the common set")
        return cls("ref", nodes, np.ones(len(nodes)), anchor.rows_for(nodes), anchor.dim)

    def bind(self, position_of) -> None:
        """Resolve alignment nodes to row positions of the training matrix."""
        self._positions = np.array([position_of(v) for v in self.nodes], dtype=np.int64)

    def evaluate(self, rows: np.ndarray, batch_positions=None):
        """(raw loss, touched row positions, gradient rows).

        With batch_positions the loss is estimated only over alignment nodes
        present in that batch (normalized by their count); an empty overlap
        contributes a zero loss and no gradient.
        """
        if self._positions is None:
            raise ContractViolationError("regularizer not bound to a matrix")
        pos = self._positions
        anchor = self.anchor_rows
        weights = self.weights
        if batch_positions is not None:
            mask = np.isin(pos, batch_positions)
            if not mask.any():
                return 0.0, pos[:0], np.zeros((0, rows.shape[1]))
            pos, anchor, weights = pos[mask], anchor[mask], weights[mask]
        loss, grads = _loss_core(rows[pos], anchor, weights, len(pos))
        return loss, pos, grads
