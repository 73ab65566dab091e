"""Dense node-id -> vector maps plus their CSV and binary on-disk formats."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import MissingEmbeddingError

_MAGIC = b"RAFN"
_VERSION = 1


class EmbeddingMatrix:
    """Embedding rows for a set of node ids, stored in ascending id order.

    ``context_vectors`` optionally carries the SGNS context matrix alongside
    the input matrix; only input rows are serialized or compared.
    """

    __slots__ = ("ids", "vectors", "context_vectors", "_pos")

    def __init__(self, ids, vectors, context_vectors=None):
        ids = np.asarray(ids, dtype=np.int64)
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or len(ids) != vectors.shape[0]:
            raise ValueError("ids and vectors disagree on row count")
        if len(ids) == 0:
            raise ValueError("embedding matrix needs at least one row")
        if np.any(np.diff(ids) <= 0):
            raise ValueError("node ids must be strictly increasing")
        self.ids = ids
        self.vectors = vectors
        self.context_vectors = None
        if context_vectors is not None:
            context_vectors = np.asarray(context_vectors, dtype=np.float64)
            if context_vectors.shape != vectors.shape:
                raise ValueError("context matrix shape mismatch")
            self.context_vectors = context_vectors
        self._pos = {int(nid): i for i, nid in enumerate(ids)}

    @classmethod
    def from_rows(cls, rows: dict[int, np.ndarray]) -> "EmbeddingMatrix":
        ids = sorted(rows)
        return cls(ids, np.array([rows[i] for i in ids], dtype=np.float64))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, node_id) -> bool:
        return int(node_id) in self._pos

    def position(self, node_id: int) -> int:
        try:
            return self._pos[int(node_id)]
        except KeyError:
            raise MissingEmbeddingError(node_id) from None

    def row(self, node_id: int) -> np.ndarray:
        return self.vectors[self.position(node_id)]

    def positions(self, node_ids) -> np.ndarray:
        return np.array([self.position(n) for n in node_ids], dtype=np.int64)

    def rows_for(self, node_ids) -> np.ndarray:
        return self.vectors[self.positions(node_ids)]

    def with_vectors(self, vectors) -> "EmbeddingMatrix":
        """Same ids, new values (used by post-hoc alignment)."""
        return EmbeddingMatrix(self.ids, vectors)

    def allclose(self, other: "EmbeddingMatrix", **kw) -> bool:
        return (
            np.array_equal(self.ids, other.ids)
            and self.vectors.shape == other.vectors.shape
            and np.allclose(self.vectors, other.vectors, **kw)
        )

    # --- CSV format: header node_id,v1,...,vd then one row per node ---

    def to_csv(self, path) -> None:
        d = self.dim
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("node_id," + ",".join(f"v{j + 1}" for j in range(d)) + "\n")
            for nid, vec in zip(self.ids, self.vectors):
                fh.write(str(int(nid)) + "," + ",".join(format(x, ".17g") for x in vec) + "\n")

    @classmethod
    def from_csv(cls, path) -> "EmbeddingMatrix":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            if not header or header[0] != "node_id":
                raise ValueError("not an embedding CSV: bad header")
            d = len(header) - 1
            ids, rows = [], []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != d + 1:
                    raise ValueError(f"row has {len(parts) - 1} values, expected {d}")
                ids.append(int(parts[0]))
                rows.append([float(x) for x in parts[1:]])
        return cls(ids, np.array(rows, dtype=np.float64))

    # --- binary format: magic, version u32, n u64, d u32, then records of
    #     node_id u64 followed by d little-endian float32 values ---

    def to_binary(self, path) -> None:
        with np.errstate(over="ignore"):  # out-of-range turns into inf, caught below
            cast = self.vectors.astype("<f4")
        if not np.isfinite(cast).all():
            raise ValueError("embedding values do not fit in float32")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IQI", _VERSION, len(self.ids), self.dim))
            for nid, vec in zip(self.ids, cast):
                fh.write(struct.pack("<Q", int(nid)))
                fh.write(vec.tobytes())

    @classmethod
    def from_binary(cls, path) -> "EmbeddingMatrix":
        data = Path(path).read_bytes()
        if data[:4] != _MAGIC:
            raise ValueError("bad magic; not an embedding binary")
        version, n, d = struct.unpack_from("<IQI", data, 4)
        if version != _VERSION:
            raise ValueError(f"unsupported version {version}")
        off = 4 + 16
        rec = 8 + 4 * d
        if len(data) != off + n * rec:
            raise ValueError("truncated embedding binary")
        ids = np.empty(n, dtype=np.int64)
        rows = np.empty((n, d), dtype=np.float64)
        for i in range(n):
            (nid,) = struct.unpack_from("<Q", data, off)
            ids[i] = nid
            rows[i] = np.frombuffer(data, dtype="<f4", count=d, offset=off + 8)
            off += rec
        return cls(ids, rows)
