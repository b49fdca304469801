# app/orchestration/stages/discretize.py

import logging

from app.assembly.nitsche import NitscheAssembler
from app.orchestration.session_state import RunState
from app.orchestration.stages.stage_base import BaseStage

_log = logging.getLogger(__name__)


class QuadratureStage(BaseStage):
    """Creates the assembler and fills its frozen quadrature cache."""

    name = "quadrature"

    def run(self, state: RunState) -> RunState:
        problem = state["problem_def"]
        assembler = NitscheAssembler(state["overlap_data"], problem.form, state["config"].gamma, state["timings"])
        cache = assembler.build_quadrature()
        _log.debug("Quadrature cache holds %d rules.", len(cache))
        state["assembler"] = assembler
        return state


class AssemblyStage(BaseStage):
    """Runs the remaining assembly phases and applies the boundary conditions."""

    name = "assembly"

    def run(self, state: RunState) -> RunState:
        problem = state["problem_def"]
        assembler: NitscheAssembler = state["assembler"]
        f = problem.source
        assembler.assemble_background(f)
        assembler.assemble_cut_cells(f)
        assembler.assemble_overlapping(f)
        assembler.assemble_interface()
        assembler.assemble_neumann(problem.neumann)
        state["system"] = assembler.finalize(problem.dirichlet)
        return state
