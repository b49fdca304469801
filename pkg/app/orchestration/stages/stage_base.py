# app/orchestration/stages/stage_base.py

import logging
import time
from abc import ABC, abstractmethod

from app.orchestration.session_state import RunState

_log = logging.getLogger(__name__)


class BaseStage(ABC):
    """
    Abstract base for pipeline stages.

    - Times each call and records it in state["stage_log"]
    - Concrete stages implement run(state)
    """

    name: str = "stage"

    def __call__(self, state: RunState) -> RunState:
        _log.info("Stage '%s' starting (N=%s).", self.name, state.get("n"))
        start = time.perf_counter()
        state.setdefault("timings", {})
        state = self.run(state)
        elapsed = time.perf_counter() - start
        state.setdefault("stage_log", []).append(f"{self.name}: {elapsed:.3f}s")
        _log.info("Stage '%s' done in %.3fs.", self.name, elapsed)
        return state

    @abstractmethod
    def run(self, state: RunState) -> RunState:
        """
        Process the run state and return an updated state.
        Concrete stages must implement this.
        """
        raise NotImplementedError("Stages must implement run")
