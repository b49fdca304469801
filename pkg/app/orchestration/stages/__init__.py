from .discretize import AssemblyStage, QuadratureStage
from .geometry import OverlapStage
from .solve import DisplacementSummaryStage, ErrorNormStage, SolveStage, displacement_summary, has_exact_solution
from .stage_base import BaseStage

__all__ = [
    "AssemblyStage",
    "BaseStage",
    "DisplacementSummaryStage",
    "ErrorNormStage",
    "OverlapStage",
    "QuadratureStage",
    "SolveStage",
    "displacement_summary",
    "has_exact_solution",
]
