# app/orchestration/run_once.py

import logging
from typing import Any, Dict, Optional

from app.orchestration.build_flow import STAGE_ORDER, build_pipeline
from app.orchestration.problems import ProblemDefinition
from app.orchestration.session_state import RunConfig, RunState

_log = logging.getLogger(__name__)

# Module-level cache of compiled stage graphs, keyed by last stage
_PIPELINES: Dict[str, Any] = {}


def get_pipeline(until: str = "errors") -> Any:
    """
    Retrieve or build the compiled graph ending at `until` (cached).
    """
    if until not in _PIPELINES:
        _log.info("Constructing stage graph (cached) up to '%s'.", until)
        _PIPELINES[until] = build_pipeline(until)
    return _PIPELINES[until]


def run_pipeline_once(
    config: RunConfig,
    problem: str,
    n: int,
    until: str = "errors",
    problem_def: Optional[ProblemDefinition] = None,
) -> RunState:
    """
    Execute the stage graph once for one resolution and return the final state.

    Args:
        config: Validated run configuration.
        problem: "poisson" or "elasticity".
        n: Background resolution.
        until: Last stage to run.
        problem_def: Prebuilt meshes and data; built from `config` when None.

    Returns:
        The state after the last stage; state["timings"] holds per-phase wall times.
    """
    _log.info("Starting single pipeline run: %s, N=%d.", problem, n)
    graph = get_pipeline(until)
    initial_state: RunState = {
        "config": config,
        "problem": problem,
        "n": n,
        "problem_def": problem_def,
        "timings": {},
        "stage_log": [],
    }
    state = graph.invoke(initial_state, config={"recursion_limit": len(STAGE_ORDER) + 2})
    _log.info("Pipeline run finished: %s", "; ".join(state["stage_log"]))
    return state
