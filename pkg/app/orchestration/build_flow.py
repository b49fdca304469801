# app/orchestration/build_flow.py

import logging
from typing import Tuple

from langgraph.graph import END, StateGraph

from app.errors import ConfigurationError
from app.orchestration.session_state import RunState
from app.orchestration.stages import (
    AssemblyStage,
    DisplacementSummaryStage,
    ErrorNormStage,
    OverlapStage,
    QuadratureStage,
    SolveStage,
    has_exact_solution,
)

_log = logging.getLogger(__name__)

STAGE_ORDER: Tuple[str, ...] = ("overlap", "quadrature", "assembly", "solve", "errors")


def _route_evaluation(state: RunState) -> str:
    return "exact" if has_exact_solution(state) else "summary"


def build_pipeline(until: str = "errors"):
    """
    Assemble and compile the stage graph, ending after `until`.

        overlap -> quadrature -> assembly -> solve -+-> errors  (exact solution known)
                                                    +-> summary (otherwise)

    Raises:
        ConfigurationError: if `until` is not a stage name.
    """
    if until not in STAGE_ORDER:
        raise ConfigurationError(f"Unknown stage '{until}'; choose from {STAGE_ORDER}")
    _log.info("Composing stage graph up to '%s' ...", until)

    g = StateGraph(RunState)
    chain = [OverlapStage(), QuadratureStage(), AssemblyStage(), SolveStage()][: STAGE_ORDER.index(until) + 1]
    for stage in chain:
        g.add_node(stage.name, stage)
    for prev, nxt in zip(chain, chain[1:]):
        g.add_edge(prev.name, nxt.name)
    g.set_entry_point(chain[0].name)

    if until == "errors":
        g.add_node(ErrorNormStage.name, ErrorNormStage())
        g.add_node(DisplacementSummaryStage.name, DisplacementSummaryStage())
        # Evaluation depends on whether the problem carries an exact solution
        g.add_conditional_edges(
            chain[-1].name,
            _route_evaluation,
            {"exact": ErrorNormStage.name, "summary": DisplacementSummaryStage.name},
        )
        g.add_edge(ErrorNormStage.name, END)
        g.add_edge(DisplacementSummaryStage.name, END)
    else:
        g.add_edge(chain[-1].name, END)

    graph = g.compile()
    _log.info("Stage graph compiled up to '%s'.", until)
    return graph
