# app/orchestration/stages/solve.py

import logging
import time

import numpy as np

from app.assembly.dofmap import distribute_solution
from app.assembly.error_norms import compute_errors, interface_jump_norm
from app.backends.cg_solver import cg_solve
from app.orchestration.session_state import RunState
from app.orchestration.stages.stage_base import BaseStage

_log = logging.getLogger(__name__)


class SolveStage(BaseStage):
    """Jacobi-preconditioned CG on the finalized system."""

    name = "solve"

    def run(self, state: RunState) -> RunState:
        config = state["config"]
        system = state["system"]
        start = time.perf_counter()
        x, report = cg_solve(
            system.matrix,
            system.rhs,
            tol=config.tol,
            max_iter=config.max_iter_factor * system.matrix.dim,
            preconditioner=config.preconditioner,
        )
        state["timings"]["solve"] = state["timings"].get("solve", 0.0) + time.perf_counter() - start
        if not report.converged:
            _log.warning("N=%s: solver stopped at residual %.3e", state.get("n"), report.residual)
        state["solution"] = x
        state["report"] = report
        return state


def displacement_summary(x: np.ndarray, state: RunState) -> dict:
    """Peak displacement magnitudes per mesh and the interface jump (absolute and RMS)."""
    dofmap = state["system"].dofmap
    data = state["overlap_data"]
    u0, u2 = distribute_solution(x, dofmap)
    mag0 = np.linalg.norm(u0.reshape(len(u0), -1), axis=1)
    mag2 = np.linalg.norm(u2.reshape(len(u2), -1), axis=1)
    active = np.ones(dofmap.num_dofs, dtype=bool) if dofmap.active is None else dofmap.active
    active0 = active[: dofmap.value_dim * len(mag0)].reshape(len(mag0), dofmap.value_dim).any(axis=1)
    jump = interface_jump_norm(x, dofmap, data, h_weighted=False)
    area = data.interface_area()
    max0 = float(mag0[active0].max(initial=0.0))
    max2 = float(mag2.max(initial=0.0))
    return {
        "max_u_background": max0,
        "max_u_overlapping": max2,
        "max_u": max(max0, max2),
        "jump_l2": jump,
        "jump_rms": jump / np.sqrt(area) if area > 0.0 else 0.0,
        "interface_area": area,
    }


def has_exact_solution(state: RunState) -> bool:
    problem = state["problem_def"]
    return problem.exact_u is not None and problem.exact_grad is not None


class ErrorNormStage(BaseStage):
    """L2, H1 and interface-jump errors against the exact solution."""

    name = "errors"

    def run(self, state: RunState) -> RunState:
        problem = state["problem_def"]
        state["results"] = compute_errors(
            state["solution"], state["system"].dofmap, state["overlap_data"], problem.exact_u, problem.exact_grad
        )
        return state


class DisplacementSummaryStage(BaseStage):
    """Peak displacements and interface jump, for problems without an exact solution."""

    name = "summary"

    def run(self, state: RunState) -> RunState:
        state["results"] = displacement_summary(state["solution"], state)
        return state
