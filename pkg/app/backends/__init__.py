from .sparse import SparseMatrix, TripletBuffer, build_from_triplets
from .cg_solver import PRECONDITIONERS, SolveReport, cg_solve

__all__ = ["PRECONDITIONERS", "SolveReport", "SparseMatrix", "TripletBuffer", "build_from_triplets", "cg_solve"]
