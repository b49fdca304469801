# app/backends/cg_solver.py

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from app.backends.sparse import SparseMatrix
from app.errors import IndefiniteMatrixError, InvalidArgumentError

_log = logging.getLogger(__name__)

PRECONDITIONERS = ("none", "jacobi")


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual: float
    converged: bool


def _preconditioner(A: SparseMatrix, kind: str) -> Callable[[np.ndarray], np.ndarray]:
    if kind == "none":
        return lambda r: r
    if kind == "jacobi":
        diag = A.diagonal()
        zero = np.nonzero(diag == 0.0)[0]
        if zero.size:
            raise InvalidArgumentError(f"Jacobi preconditioner: zero diagonal at rows {zero[:5].tolist()}")
        inv = 1.0 / diag
        return lambda r: inv * r
    raise InvalidArgumentError(f"Unknown preconditioner '{kind}'; choose from {PRECONDITIONERS}")


def cg_solve(
    A: SparseMatrix,
    b: np.ndarray,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
    preconditioner: str = "jacobi",
    x0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Preconditioned conjugate gradients for a symmetric positive definite A.

    Stops when ||b - A x|| / ||b|| <= tol or after `max_iter` iterations
    (default 10 * dim). Non-convergence is reported, not raised.

    Raises:
        InvalidArgumentError: size mismatch, unknown preconditioner or a zero
            diagonal with Jacobi.
        IndefiniteMatrixError: if a search direction has p^T A p <= 0.
    """
    b = np.asarray(b, dtype=float)
    n = A.dim
    if b.shape != (n,):
        raise InvalidArgumentError(f"Right-hand side of shape {b.shape} for a {n} x {n} matrix")
    max_iter = 10 * n if max_iter is None else int(max_iter)
    apply_m = _preconditioner(A, preconditioner)

    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A.matvec(x)
    res = float(np.linalg.norm(r)) / norm_b
    if res <= tol:
        return x, SolveReport(0, res, True)

    z = apply_m(r)
    p = z.copy()
    rz = float(r @ z)
    it = 0
    while it < max_iter:
        Ap = A.matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise IndefiniteMatrixError(f"CG breakdown at iteration {it}: p^T A p = {pAp:.3e}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        res = float(np.linalg.norm(r)) / norm_b
        if res <= tol:
            break
        z = apply_m(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    report = SolveReport(it, res, res <= tol)
    if report.converged:
        _log.info("CG converged in %d iterations (residual %.2e)", it, res)
    else:
        _log.warning("CG stopped after %d iterations with residual %.2e > %.1e", it, res, tol)
    return x, report
