from .build_flow import build_pipeline
from .run_once import run_pipeline_once
from .session_state import RunConfig, RunState, TimingBreakdown

__all__ = ["build_pipeline", "run_pipeline_once", "RunConfig", "RunState", "TimingBreakdown"]
