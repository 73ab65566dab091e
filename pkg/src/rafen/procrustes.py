"""Post-hoc orthogonal alignment of embedding matrices (Procrustes)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import ContractViolationError

_ORTHO_TOL = 1e-8
_DET_TOL = 1e-6


@dataclass(frozen=True)
class OrthogonalMap:
    """A d x d orthogonal matrix, validated on construction."""

    matrix: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.matrix, dtype=np.float64)
        object.__setattr__(self, "matrix", q)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"orthogonal map must be square, got {q.shape}")
        d = q.shape[0]
        if np.linalg.norm(q.T @ q - np.eye(d)) > _ORTHO_TOL:
            raise ValueError("matrix is not orthogonal within tolerance")
        if abs(abs(np.linalg.det(q)) - 1.0) > _DET_TOL:
            raise ValueError("matrix determinant is not +-1 within tolerance")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        return vectors @ self.matrix

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.matrix:
                fh.write(",".join(format(x, ".17g") for x in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "OrthogonalMap":
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append([float(x) for x in line.split(",")])
        return cls(np.array(rows, dtype=np.float64))


def orthogonal_procrustes(source: np.ndarray, target: np.ndarray) -> OrthogonalMap:
    """Orthogonal Q minimizing ||source @ Q - target||_F (reflections allowed).

    Classic SVD solution: Q = U V^T for U S V^T = svd(source^T target).
    """
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if source.shape != target.shape or source.ndim != 2:
        raise ContractViolationError(
            f"source/target shapes differ: {source.shape} vs {target.shape}"
        )
    if not (np.isfinite(source).all() and np.isfinite(target).all()):
        raise ContractViolationError("non-finite values in procrustes input")
    u, _, vt = np.linalg.svd(source.T @ target)
    return OrthogonalMap(u @ vt)


def align_posthoc(
    cur: EmbeddingMatrix, anchor: EmbeddingMatrix, subset
) -> tuple[EmbeddingMatrix, OrthogonalMap]:
    """Rotate all of ``cur`` onto ``anchor`` by the map fitted on ``subset``.

    The subset (ascending node order) must be covered by both matrices; the
    returned matrix keeps cur's ids with rotated vectors, so row norms are
    preserved up to floating-point roundoff.
    """
    nodes = sorted(set(subset))
    if not nodes:
        raise ContractViolationError("alignment subset is empty")
    if cur.dim != anchor.dim:
        raise ContractViolationError("embedding dimensions differ")
    qmap = orthogonal_procrustes(cur.rows_for(nodes), anchor.rows_for(nodes))
    return cur.with_vectors(qmap.apply(cur.vectors)), qmap
