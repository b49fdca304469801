# tests/test_assembly.py

import meshio
import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from app.assembly.boundary_conditions import DirichletCondition, NeumannCondition, apply_dirichlet, ident_zeros
from app.assembly.dofmap import BACKGROUND, OVERLAPPING, DofMap, NitscheSystem, distribute_solution, write_solution_vtk
from app.assembly.error_norms import compute_errors, compute_errors_standard, interface_jump_norm
from app.assembly.forms import (
    ElasticityForm,
    MaterialParams,
    PoissonForm,
    assemble_interface_part,
    barycentric,
    cell_gradients,
)
from app.assembly.nitsche import NitscheAssembler, assemble_elasticity, assemble_poisson, assemble_standard
from app.backends.cg_solver import cg_solve
from app.backends.sparse import SparseMatrix
from app.errors import DegenerateGeometryError, InvalidArgumentError
from app.meshing.tet_mesh import unit_cube_mesh
from app.overlap.overlapping_meshes import OverlapClass, build_overlap

from conftest import random_tet

SLOPE = np.array([1.0, 2.0, -1.0])


def linear_u(x):
    return np.atleast_2d(x) @ SLOPE + 0.5


def linear_grad(x):
    return np.tile(SLOPE, (len(np.atleast_2d(x)), 1))


AFFINE = np.array([[0.1, 0.02, -0.03], [0.0, -0.05, 0.04], [0.02, 0.01, 0.08]])


def affine_u(x):
    return np.atleast_2d(x) @ AFFINE.T + np.array([0.01, -0.02, 0.03])


def affine_grad(x):
    return np.broadcast_to(AFFINE, (len(np.atleast_2d(x)), 3, 3))


def _nodal_vector(data, fn):
    """Nodal interpolant on both meshes, background dofs first."""
    return np.concatenate([np.ravel(fn(data.background.vertices)), np.ravel(fn(data.overlapping.vertices))])


def _uncut_dofs(dofmap, data):
    """Dofs of uncovered background cells and of the overlapping mesh."""
    bg = data.classes.cells(OverlapClass.NOT_OVERLAPPED)
    mask = np.zeros(dofmap.num_dofs, dtype=bool)
    mask[dofmap.cell_dofs(BACKGROUND, data.background.cells[bg]).ravel()] = True
    mask[dofmap.cell_dofs(OVERLAPPING, data.overlapping.cells).ravel()] = True
    return mask


# ──────────────────────────────────────────────────────────────────────────────
# Local tensors
# ──────────────────────────────────────────────────────────────────────────────

def test_cell_gradients(reference_tet, rng):
    grads, vol = cell_gradients(reference_tet[None])
    assert vol[0] == pytest.approx(1.0 / 6.0)
    assert np.allclose(grads[0], [[-1, -1, -1], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    tets = np.stack([random_tet(rng) for _ in range(10)])
    grads, _ = cell_gradients(tets)
    assert np.allclose(grads.sum(axis=1), 0.0)
    # grad phi_a . (x_b - x_0) = delta_ab - delta_a0
    for g, p in zip(grads, tets):
        assert np.allclose(g @ (p - p[0]).T, np.eye(4) - np.eye(4)[:, :1])
    flat = reference_tet.copy()
    flat[3] = [0.5, 0.5, 0.0]
    with pytest.raises(DegenerateGeometryError):
        cell_gradients(flat[None])


def test_barycentric(rng):
    tet = random_tet(rng)
    phi = barycentric(tet, np.vstack([tet, tet.mean(axis=0)]))
    assert np.allclose(phi[:4], np.eye(4))
    assert np.allclose(phi[4], 0.25)


def test_poisson_stiffness_properties(rng):
    tets = np.stack([random_tet(rng) for _ in range(5)])
    grads, vol = cell_gradients(tets)
    k = PoissonForm().stiffness(grads, vol)
    assert np.allclose(k, k.transpose(0, 2, 1))
    assert np.allclose(k.sum(axis=2), 0.0)
    assert np.all(np.linalg.eigvalsh(k)[:, 1:] > 0.0)


def test_elasticity_rigid_modes_in_kernel(rng):
    form = ElasticityForm(MaterialParams.from_ratio(10.0, 0.1, 0.3, 0.3))
    tet = random_tet(rng)
    grads, vol = cell_gradients(tet[None])
    k = form.stiffness(grads, vol)[0]
    assert np.allclose(k, k.T)
    modes = [np.tile(e, 4) for e in np.eye(3)]
    for axis in np.eye(3):
        modes.append(np.cross(axis, tet).reshape(-1))
    for mode in modes:
        assert np.abs(k @ mode).max() < 1e-10 * np.abs(k).max()
    assert np.sum(np.linalg.eigvalsh(k) > 1e-10 * np.abs(k).max()) == 6


def test_elasticity_traction_of_affine_field(rng):
    materials = MaterialParams((5.0, 1.0), (0.25, 0.3))
    form = ElasticityForm(materials)
    tet = random_tet(rng)
    grads, _ = cell_gradients(tet[None])
    n = np.array([0.0, 0.6, 0.8])
    u = affine_u(tet).reshape(-1)
    eps = 0.5 * (AFFINE + AFFINE.T)
    sigma = 2.0 * materials.mu(0) * eps + materials.lam(0) * np.trace(eps) * np.eye(3)
    assert np.allclose(form.flux(grads[0], n, 0) @ u, sigma @ n)
    assert form.penalty_scale() == pytest.approx(2.0 * materials.mu(0) + materials.lam(0))


def test_material_validation():
    with pytest.raises(InvalidArgumentError):
        MaterialParams((1.0, 1.0), (0.3, 0.5))
    with pytest.raises(InvalidArgumentError):
        MaterialParams((0.0, 1.0), (0.3, 0.3))
    m = MaterialParams.from_ratio(10.0, 0.1, 0.3, 0.2)
    assert m.E == (1.0, 10.0) and m.nu == (0.2, 0.3)
    with pytest.raises(InvalidArgumentError):
        PoissonForm(flux_side=3)


# ──────────────────────────────────────────────────────────────────────────────
# Dofs and boundary conditions
# ──────────────────────────────────────────────────────────────────────────────

def test_dofmap_layout():
    dm = DofMap(10, 4, value_dim=3)
    assert dm.num_dofs == 42 and dm.num_active == 42
    assert dm.offset(OVERLAPPING) == 30
    assert list(dm.cell_dofs(BACKGROUND, [[0, 1, 2, 3]])[0][:6]) == [0, 1, 2, 3, 4, 5]
    assert list(dm.vertex_dofs(OVERLAPPING, [1])[0]) == [33, 34, 35]
    u0, u2 = distribute_solution(np.arange(42.0), dm)
    assert u0.shape == (10, 3) and u2.shape == (4, 3) and u2[0, 0] == 30.0


def test_ident_zeros_and_dirichlet():
    a = SparseMatrix(sp.csr_matrix(np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, 0.0], [0.0, 0.0, 0.0]])))
    system = ident_zeros(NitscheSystem(a, np.array([1.0, 1.0, 5.0]), 0.0, DofMap(3)))
    assert list(system.inactive_rows) == [2]
    assert system.matrix.to_dense()[2, 2] == 1.0 and system.rhs[2] == 0.0

    fixed = apply_dirichlet(system, [0], [3.0])
    dense = fixed.matrix.to_dense()
    assert fixed.matrix.is_symmetric()
    assert np.allclose(dense[0], [1.0, 0.0, 0.0]) and np.allclose(dense[:, 0], [1.0, 0.0, 0.0])
    assert np.allclose(fixed.rhs, [3.0, 4.0, 0.0])
    assert list(fixed.constrained) == [0]
    # the same value twice is fine
    apply_dirichlet(system, [0, 0], [3.0, 3.0])
    with pytest.raises(InvalidArgumentError):
        apply_dirichlet(system, [0, 0], [3.0, 4.0])
    with pytest.raises(InvalidArgumentError):
        apply_dirichlet(system, [0], [1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        apply_dirichlet(system, [3], [1.0])


def test_neumann_loads_sum_to_flux():
    mesh = unit_cube_mesh(3)
    dofs, loads = NeumannCondition(1.0).load(mesh, DofMap(mesh.num_vertices))
    assert loads.sum() == pytest.approx(6.0)
    top = NeumannCondition((1.0, 2.0, 3.0), where=lambda x: np.abs(x[:, 2] - 1.0) < 1e-12)
    dofs, loads = top.load(mesh, DofMap(mesh.num_vertices, value_dim=3))
    assert dofs.shape == loads.shape == (18, 9)
    assert np.allclose(loads.reshape(-1, 3).sum(axis=0), [1.0, 2.0, 3.0])


def test_dirichlet_selects_boundary_components():
    mesh = unit_cube_mesh(2)
    dm = DofMap(mesh.num_vertices, value_dim=3)
    bottom = DirichletCondition(0.0, where=lambda x: x[:, 2] < 1e-12, components=(2,))
    dofs, values = bottom.dofs_and_values(mesh, dm)
    assert len(dofs) == 9 and np.all(dofs % 3 == 2) and np.all(values == 0.0)


# ──────────────────────────────────────────────────────────────────────────────
# Single mesh and coupled systems
# ──────────────────────────────────────────────────────────────────────────────

def test_standard_patch_test():
    mesh = unit_cube_mesh(4)
    timings = {}
    system = assemble_standard(mesh, PoissonForm(), None, dirichlet=(DirichletCondition(linear_u),), timings=timings)
    x, report = cg_solve(system.matrix, system.rhs, tol=1e-13)
    assert report.converged
    assert np.allclose(x, linear_u(mesh.vertices), atol=1e-9)
    assert compute_errors_standard(x, mesh, linear_u, linear_grad).h1 < 1e-8
    assert timings["standard_assembly"] > 0.0


def test_standard_elasticity_translation_patch():
    mesh = unit_cube_mesh(3)
    form = ElasticityForm(MaterialParams.from_ratio(10.0, 1.0, 0.3, 0.3))
    shift = (0.1, -0.2, 0.3)
    system = assemble_standard(mesh, form, None, dirichlet=(DirichletCondition(shift),))
    x, report = cg_solve(system.matrix, system.rhs, tol=1e-13)
    assert report.converged
    assert np.abs(x.reshape(-1, 3) - shift).max() <= 1e-8


def test_nitsche_system_structure(rotated_overlap):
    timings = {}
    assembler = NitscheAssembler(rotated_overlap, PoissonForm(), 50.0, timings)
    system = assembler.assemble(lambda x: np.ones(len(x)), dirichlet=(DirichletCondition(0.0),))
    dm = system.dofmap
    assert system.matrix.dim == dm.num_dofs
    assert system.matrix.is_symmetric()
    assert set(system.inactive_rows.tolist()) == set(np.nonzero(~dm.active)[0].tolist())
    assert assembler.cache.frozen
    assert all(("part", i) in assembler.cache for i in range(len(rotated_overlap.facet_parts)))
    assert assembler.cache.hits >= len(rotated_overlap.facet_parts)
    for phase in ("quadrature", "standard_assembly", "cut_assembly", "interface_assembly"):
        assert phase in timings
    with pytest.raises(InvalidArgumentError):
        NitscheAssembler(rotated_overlap, PoissonForm(), -1.0)


def _p1_at(tet, x):
    """Hat function values and gradients of `tet` at one point, from the 4x4 affine system."""
    inv = np.linalg.inv(np.vstack([np.ones(4), np.asarray(tet).T]))
    return inv @ np.concatenate([[1.0], x]), inv[:, 1:]


@pytest.mark.parametrize("flux_side", [1, 2])
def test_interface_part_matches_centroid_formula(rotated_overlap, flux_side):
    data = rotated_overlap
    part = max(data.facet_parts, key=lambda p: p.area)
    tet_k, tet_l = data.overlapping.cell_points(part.cell_k), data.background.cell_points(part.cell_l)
    h = float(data.background.cell_diameters()[part.cell_l])
    form = PoissonForm(flux_side=flux_side)

    phi_k, grad_k = _p1_at(tet_k, part.centroid)
    phi_l, grad_l = _p1_at(tet_l, part.centroid)
    jump = np.concatenate([phi_k, -phi_l])
    if flux_side == 2:
        flux = np.concatenate([grad_k @ part.normal, np.zeros(4)])
    else:
        flux = np.concatenate([np.zeros(4), grad_l @ part.normal])
    consistency = -part.area * (np.outer(jump, flux) + np.outer(flux, jump))
    expected = consistency + 50.0 / h * part.area * np.outer(jump, jump)

    block = assemble_interface_part(part, tet_k, tet_l, form, 50.0, h)
    assert block.shape == (8, 8)
    assert np.allclose(block, expected, rtol=1e-10, atol=1e-12 * np.abs(expected).max())
    # a function continuous across the interface sees no coupling
    assert np.abs(block @ np.ones(8)).max() < 1e-10 * np.abs(block).max()

    bare = assemble_interface_part(part, tet_k, tet_l, form, 0.0, h)
    assert np.allclose(bare, consistency, rtol=1e-10, atol=1e-12 * np.abs(consistency).max())
    assert np.allclose(bare, bare.T)
    assert np.linalg.matrix_rank(bare, tol=1e-10 * np.abs(bare).max()) <= 2


def test_coupled_poisson_system_is_positive_definite(rotated_overlap):
    system = assemble_poisson(rotated_overlap, None, 50.0, dirichlet=(DirichletCondition(0.0),))
    lowest = spla.eigsh(system.matrix.csr, k=1, sigma=0.0, which="LM", return_eigenvectors=False)
    assert lowest[0] > 0.0


def test_active_dofs_are_the_untouched_rows(rotated_pair):
    background, overlapping = rotated_pair
    data = build_overlap(background, overlapping, seed=7, small_cut_threshold=0.5)
    assert any(cut.small for cut in data.cut_cells)
    system = NitscheAssembler(data, PoissonForm(), 50.0).assemble()
    dm = system.dofmap
    assert set(system.inactive_rows.tolist()) == set(np.nonzero(~dm.active)[0].tolist())
    # small cut cells still carry their interface terms
    small_with_parts = {p.cell_l for p in data.facet_parts} & {c.cell_l for c in data.cut_cells if c.small}
    assert small_with_parts
    for cell in small_with_parts:
        assert dm.active[dm.cell_dofs(BACKGROUND, background.cells[cell])].any()


@pytest.mark.parametrize("flux_side", [1, 2])
def test_nitsche_poisson_patch_test(rotated_overlap, flux_side):
    data = rotated_overlap
    system = assemble_poisson(data, None, 50.0, dirichlet=(DirichletCondition(linear_u),), flux_side=flux_side)
    x, report = cg_solve(system.matrix, system.rhs, tol=1e-11, max_iter=20 * system.matrix.dim)
    assert report.converged
    exact = _nodal_vector(data, linear_u)
    uncut = _uncut_dofs(system.dofmap, data)
    assert np.abs(x - exact)[uncut].max() < 1e-5
    errors = compute_errors(x, system.dofmap, data, linear_u, linear_grad)
    assert errors.l2 < 1e-5 and errors.h1 < 1e-4 and errors.jump < 1e-5


def test_nitsche_elasticity_patch_test(rotated_overlap):
    data = rotated_overlap
    materials = MaterialParams.from_ratio(10.0, 1.0, 0.3, 0.3)
    system = assemble_elasticity(data, materials, None, 50.0, dirichlet=(DirichletCondition(affine_u),))
    x, report = cg_solve(system.matrix, system.rhs, tol=1e-11, max_iter=20 * system.matrix.dim)
    assert report.converged
    exact = np.concatenate([affine_u(data.background.vertices).ravel(), affine_u(data.overlapping.vertices).ravel()])
    uncut = _uncut_dofs(system.dofmap, data)
    assert np.abs(x - exact)[uncut].max() < 1e-5
    assert compute_errors(x, system.dofmap, data, affine_u, affine_grad).h1 < 1e-4


def test_interface_jump_norm(rotated_overlap):
    data = rotated_overlap
    dm = DofMap(data.background.num_vertices, data.overlapping.num_vertices)
    x = np.concatenate([np.zeros(data.background.num_vertices), np.ones(data.overlapping.num_vertices)])
    h = data.background.cell_diameters()
    weighted = np.sqrt(sum(p.area / h[p.cell_l] for p in data.facet_parts))
    assert interface_jump_norm(x, dm, data) == pytest.approx(weighted)
    assert interface_jump_norm(x, dm, data, h_weighted=False) == pytest.approx(np.sqrt(data.interface_area()))


def test_write_solution_vtk(tmp_path, rotated_overlap):
    data = rotated_overlap
    dm = DofMap(data.background.num_vertices, data.overlapping.num_vertices)
    x = _nodal_vector(data, linear_u)
    path0, path2 = write_solution_vtk(x, dm, data.background, data.overlapping, tmp_path, prefix="lin")
    assert path0.name == "lin_background.vtk" and path2.name == "lin_overlapping.vtk"
    mesh = meshio.read(path2)
    assert np.allclose(mesh.point_data["u_overlapping"], linear_u(data.overlapping.vertices))
