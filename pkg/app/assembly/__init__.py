from .dofmap import BACKGROUND, OVERLAPPING, DofMap, NitscheSystem, distribute_solution, write_solution_vtk
from .forms import (
    ElasticityForm,
    MaterialParams,
    PoissonForm,
    assemble_cut_cell,
    assemble_interface_part,
    assemble_standard_cell,
    barycentric,
    cell_gradients,
)
from .boundary_conditions import DirichletCondition, NeumannCondition, apply_dirichlet, ident_zeros
from .nitsche import NitscheAssembler, assemble_elasticity, assemble_poisson, assemble_standard
from .error_norms import ErrorReport, compute_errors, compute_errors_standard, interface_jump_norm

__all__ = [
    "BACKGROUND",
    "OVERLAPPING",
    "DirichletCondition",
    "DofMap",
    "ElasticityForm",
    "ErrorReport",
    "MaterialParams",
    "NeumannCondition",
    "NitscheAssembler",
    "NitscheSystem",
    "PoissonForm",
    "apply_dirichlet",
    "assemble_cut_cell",
    "assemble_elasticity",
    "assemble_interface_part",
    "assemble_poisson",
    "assemble_standard",
    "assemble_standard_cell",
    "barycentric",
    "cell_gradients",
    "compute_errors",
    "compute_errors_standard",
    "distribute_solution",
    "ident_zeros",
    "interface_jump_norm",
    "write_solution_vtk",
]
