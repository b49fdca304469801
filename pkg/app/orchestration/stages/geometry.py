# app/orchestration/stages/geometry.py

import logging

from app.orchestration.problems import make_problem
from app.orchestration.session_state import RunState
from app.orchestration.stages.stage_base import BaseStage
from app.overlap.overlapping_meshes import build_overlap

_log = logging.getLogger(__name__)


class OverlapStage(BaseStage):
    """
    Builds the meshes of the run (unless a problem definition is already in
    the state) and computes their geometric overlap.
    """

    name = "overlap"

    def run(self, state: RunState) -> RunState:
        config = state["config"]
        if state.get("problem_def") is None:
            state["problem_def"] = make_problem(config, state["problem"], state["n"])
        problem = state["problem_def"]
        state["overlap_data"] = build_overlap(
            problem.background,
            problem.overlapping,
            seed=config.seed,
            small_cut_threshold=config.small_cut_threshold,
            timings=state["timings"],
        )
        return state
