# app/backends/sparse.py

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from app.errors import InvalidArgumentError

_log = logging.getLogger(__name__)

Triplet = Tuple[int, int, float]


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """
    Square matrix in compressed sparse row form with sorted, unique column
    indices per row. Both triangles of symmetric operators are stored.
    """

    csr: sp.csr_matrix

    def __post_init__(self) -> None:
        m = sp.csr_matrix(self.csr, dtype=float)
        if m.shape[0] != m.shape[1]:
            raise InvalidArgumentError(f"Matrix must be square, got {m.shape}")
        m.sum_duplicates()
        m.sort_indices()
        object.__setattr__(self, "csr", m)

    @property
    def dim(self) -> int:
        return self.csr.shape[0]

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    @property
    def row_offsets(self) -> np.ndarray:
        return self.csr.indptr

    @property
    def column_indices(self) -> np.ndarray:
        return self.csr.indices

    @property
    def values(self) -> np.ndarray:
        return self.csr.data

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.csr @ np.asarray(x, dtype=float)

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return self.matvec(x)

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def max_abs(self) -> float:
        return float(np.abs(self.csr.data).max()) if self.nnz else 0.0

    def is_symmetric(self, rtol: float = 1e-10) -> bool:
        """max |A - A^T| <= rtol * max |A|."""
        diff = self.csr - self.csr.T
        worst = float(np.abs(diff.data).max()) if diff.nnz else 0.0
        return worst <= rtol * max(self.max_abs(), 1e-300)

    def write_coordinate(self, path: Union[str, Path]) -> int:
        """Write `row col value` per stored entry; returns the entry count."""
        coo = self.csr.tocoo()
        lines = [f"{i} {j} {v:.17g}" for i, j, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        _log.info("Matrix (%d x %d, %d entries) written to %s", self.dim, self.dim, self.nnz, path)
        return len(lines)


def build_from_triplets(dim: int, triplets: Iterable[Triplet]) -> SparseMatrix:
    """
    Assemble a dim x dim matrix; duplicate (row, col) entries are summed.

    Raises:
        InvalidArgumentError: for a negative dimension or an out-of-range index.
    """
    if dim < 0:
        raise InvalidArgumentError(f"Negative matrix dimension {dim}")
    entries = list(triplets)
    if not entries:
        return SparseMatrix(sp.csr_matrix((dim, dim)))
    rows, cols, vals = (np.asarray(col) for col in zip(*entries))
    return _from_coo(dim, rows.astype(np.int64), cols.astype(np.int64), vals.astype(float))


def _from_coo(dim: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray) -> SparseMatrix:
    if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= dim or cols.max() >= dim):
        raise InvalidArgumentError(f"Triplet index outside [0, {dim})")
    return SparseMatrix(sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr())


class TripletBuffer:
    """Accumulates dense local blocks scattered to global indices."""

    def __init__(self, dim: int) -> None:
        self.dim = dim
        self._rows: List[np.ndarray] = []
        self._cols: List[np.ndarray] = []
        self._vals: List[np.ndarray] = []
        self.rhs = np.zeros(dim)

    def __len__(self) -> int:
        return int(sum(len(v) for v in self._vals))

    def add_block(self, dofs: Sequence[int], block: np.ndarray) -> None:
        idx = np.asarray(dofs, dtype=np.int64)
        self._rows.append(np.repeat(idx, len(idx)))
        self._cols.append(np.tile(idx, len(idx)))
        self._vals.append(np.asarray(block, dtype=float).reshape(-1))

    def add_blocks(self, dofs: np.ndarray, blocks: np.ndarray) -> None:
        """Batched `add_block`: dofs (m, k), blocks (m, k, k)."""
        idx = np.asarray(dofs, dtype=np.int64)
        if idx.size == 0:
            return
        k = idx.shape[1]
        self._rows.append(np.repeat(idx[:, :, None], k, axis=2).reshape(-1))
        self._cols.append(np.repeat(idx[:, None, :], k, axis=1).reshape(-1))
        self._vals.append(np.asarray(blocks, dtype=float).reshape(-1))

    def add_vector(self, dofs: Sequence[int], values: np.ndarray) -> None:
        """Scatter-add values; also accepts batched (m, k) dofs and values."""
        np.add.at(self.rhs, np.asarray(dofs, dtype=np.int64).reshape(-1), np.asarray(values, dtype=float).reshape(-1))

    def to_matrix(self) -> SparseMatrix:
        if not self._vals:
            return SparseMatrix(sp.csr_matrix((self.dim, self.dim)))
        return _from_coo(
            self.dim,
            np.concatenate(self._rows),
            np.concatenate(self._cols),
            np.concatenate(self._vals),
        )
