# tests/test_linalg.py

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from app.backends.cg_solver import cg_solve
from app.backends.sparse import SparseMatrix, TripletBuffer, build_from_triplets
from app.errors import IndefiniteMatrixError, InvalidArgumentError


def _laplacian_1d(n: int) -> SparseMatrix:
    return SparseMatrix(sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]))


def test_triplets_sum_duplicates():
    m = build_from_triplets(3, [(0, 0, 1.0), (0, 0, 2.0), (2, 1, -1.0), (1, 2, 0.5)])
    dense = m.to_dense()
    assert dense[0, 0] == 3.0 and dense[2, 1] == -1.0 and dense[1, 2] == 0.5
    assert m.nnz == 3
    assert np.all(np.diff(m.row_offsets) >= 0)
    for r in range(3):
        cols = m.column_indices[m.row_offsets[r]:m.row_offsets[r + 1]]
        assert np.all(np.diff(cols) > 0)


def test_triplet_errors():
    with pytest.raises(InvalidArgumentError):
        build_from_triplets(2, [(0, 2, 1.0)])
    with pytest.raises(InvalidArgumentError):
        build_from_triplets(-1, [])
    with pytest.raises(InvalidArgumentError):
        SparseMatrix(sp.csr_matrix((2, 3)))
    assert build_from_triplets(4, []).nnz == 0


def test_buffer_matches_dense_scatter(rng):
    dim = 10
    buf = TripletBuffer(dim)
    dense = np.zeros((dim, dim))
    rhs = np.zeros(dim)
    dofs = rng.integers(0, dim, size=(5, 4))
    blocks = rng.normal(size=(5, 4, 4))
    buf.add_blocks(dofs, blocks)
    buf.add_block(dofs[0], blocks[0])
    buf.add_vector(dofs, np.ones((5, 4)))
    for d, b in zip(list(dofs) + [dofs[0]], list(blocks) + [blocks[0]]):
        dense[np.ix_(d, d)] += b
    np.add.at(rhs, dofs.ravel(), 1.0)
    assert np.allclose(buf.to_matrix().to_dense(), dense)
    assert np.allclose(buf.rhs, rhs)
    assert len(buf) == 6 * 16


def test_symmetry_and_coordinate_dump(tmp_path):
    a = _laplacian_1d(5)
    assert a.is_symmetric()
    assert not build_from_triplets(2, [(0, 1, 1.0)]).is_symmetric()
    assert a.write_coordinate(tmp_path / "a.txt") == 13
    assert len((tmp_path / "a.txt").read_text().splitlines()) == 13


def test_cg_matches_direct_solve(rng):
    a = _laplacian_1d(60)
    b = rng.normal(size=60)
    x, report = cg_solve(a, b, tol=1e-12)
    assert report.converged and report.residual <= 1e-12
    assert report.iterations <= 60
    assert np.allclose(x, spla.spsolve(a.csr.tocsc(), b), atol=1e-8)


def test_cg_zero_rhs_and_initial_guess():
    a = _laplacian_1d(8)
    x, report = cg_solve(a, np.zeros(8))
    assert np.all(x == 0.0) and report.iterations == 0 and report.converged
    exact = np.arange(8.0)
    _, report = cg_solve(a, a @ exact, x0=exact)
    assert report.iterations == 0


def test_jacobi_solves_diagonal_in_one_step():
    a = SparseMatrix(sp.diags(np.arange(1.0, 101.0)))
    _, report = cg_solve(a, np.ones(100), preconditioner="jacobi")
    assert report.iterations == 1
    _, plain = cg_solve(a, np.ones(100), preconditioner="none")
    assert plain.iterations > report.iterations


def test_cg_reports_non_convergence():
    _, report = cg_solve(_laplacian_1d(50), np.ones(50), max_iter=2)
    assert report.iterations == 2 and not report.converged


def test_cg_errors():
    with pytest.raises(IndefiniteMatrixError):
        cg_solve(SparseMatrix(sp.diags([1.0, -1.0])), np.ones(2), preconditioner="none")
    with pytest.raises(InvalidArgumentError):
        cg_solve(SparseMatrix(sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))), np.ones(2))
    with pytest.raises(InvalidArgumentError):
        cg_solve(_laplacian_1d(3), np.ones(3), preconditioner="ilu")
    with pytest.raises(InvalidArgumentError):
        cg_solve(_laplacian_1d(3), np.ones(4))
