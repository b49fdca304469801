# app/assembly/nitsche.py

import logging
import time
from contextlib import contextmanager
from typing import Dict, Iterator, Optional, Sequence

import numpy as np

from app.assembly.boundary_conditions import DirichletCondition, NeumannCondition, apply_dirichlet, ident_zeros
from app.assembly.dofmap import BACKGROUND, OVERLAPPING, DofMap, NitscheSystem
from app.assembly.forms import (
    ElasticityForm,
    Form,
    MaterialParams,
    PoissonForm,
    SourceFn,
    assemble_cut_cell,
    assemble_interface_part,
    cell_gradients,
    load_vectors,
)
from app.backends.sparse import TripletBuffer
from app.errors import InvalidArgumentError
from app.meshing.tet_mesh import TetMesh
from app.overlap.overlapping_meshes import OverlapClass, OverlapData, iterate_cut_cells, iterate_facet_parts
from app.quadrature.cache import QuadratureCache
from app.quadrature.rules import barycenter_rule, tet_rule

_log = logging.getLogger(__name__)


class NitscheAssembler:
    """
    Builds the coupled system of one overlap configuration, phase by phase:

        build_quadrature      cut-cell and facet-part rules into a frozen cache
        assemble_background   uncut, not overlapped background cells
        assemble_cut_cells    visible parts of partially overlapped cells
        assemble_overlapping  every cell of the overlapping mesh
        assemble_interface    Nitsche coupling on every facet part
        assemble_neumann      boundary data on the background boundary
        finalize              ident_zeros, then Dirichlet elimination

    Wall times are accumulated into `timings` per phase.
    """

    def __init__(self, data: OverlapData, form: Form, gamma: float, timings: Optional[Dict[str, float]] = None) -> None:
        if gamma < 0.0:
            raise InvalidArgumentError(f"Penalty parameter must be non-negative, got {gamma}")
        self.data = data
        self.form = form
        self.gamma = float(gamma)
        self.timings = {} if timings is None else timings
        base = DofMap(data.background.num_vertices, data.overlapping.num_vertices, form.value_dim)
        self.dofmap = base.with_active_cells(data.background, data.supporting_cells(), data.overlapping)
        self.buffer = TripletBuffer(self.dofmap.num_dofs)
        self.cache = QuadratureCache()

    @contextmanager
    def _phase(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    def build_quadrature(self) -> QuadratureCache:
        with self._phase("quadrature"):
            for cell, cut in iterate_cut_cells(self.data):
                if not cut.small and cut.visible_volume > 0.0:
                    self.cache.get_or_compute(
                        ("cell", cell), lambda c=cut: barycenter_rule(c.visible_volume, c.visible_centroid)
                    )
            for index, part in enumerate(self.data.facet_parts):
                self.cache.get_or_compute(("part", index), lambda p=part: barycenter_rule(p.area, p.centroid))
            self.cache.freeze()
        return self.cache

    def _add_cells(self, mesh: TetMesh, mesh_index: int, cells: np.ndarray, f: Optional[SourceFn], subdomain: int) -> None:
        if len(cells) == 0:
            return
        points = mesh.cell_points()[cells]
        grads, vol = cell_gradients(points)
        dofs = self.dofmap.cell_dofs(mesh_index, mesh.cells[cells])
        self.buffer.add_blocks(dofs, self.form.stiffness(grads, vol, subdomain))
        if f is not None:
            self.buffer.add_vector(dofs, load_vectors(points, self.form, f, tet_rule(2)))

    def assemble_background(self, f: Optional[SourceFn] = None) -> None:
        with self._phase("standard_assembly"):
            cells = self.data.classes.cells(OverlapClass.NOT_OVERLAPPED)
            self._add_cells(self.data.background, BACKGROUND, cells, f, 0)

    def assemble_overlapping(self, f: Optional[SourceFn] = None) -> None:
        with self._phase("standard_assembly"):
            mesh = self.data.overlapping
            self._add_cells(mesh, OVERLAPPING, np.arange(mesh.num_cells), f, 1)

    def assemble_cut_cells(self, f: Optional[SourceFn] = None) -> None:
        with self._phase("cut_assembly"):
            mesh = self.data.background
            for cell, cut in iterate_cut_cells(self.data):
                if cut.small or cut.visible_volume <= 0.0:
                    continue
                rule = self.cache.get(("cell", cell)) if self.cache.frozen else None
                stiff, load = assemble_cut_cell(mesh.cell_points(cell), cut, self.form, f, 0, rule)
                dofs = self.dofmap.cell_dofs(BACKGROUND, mesh.cells[cell])[0]
                self.buffer.add_block(dofs, stiff)
                self.buffer.add_vector(dofs, load)

    def assemble_interface(self) -> None:
        with self._phase("interface_assembly"):
            bg, ov = self.data.background, self.data.overlapping
            h = bg.cell_diameters()
            blocks, dofs = [], []
            for index, (part, k, l) in enumerate(iterate_facet_parts(self.data)):
                rule = self.cache.get(("part", index)) if self.cache.frozen else None
                blocks.append(
                    assemble_interface_part(
                        part, ov.cell_points(k), bg.cell_points(l), self.form, self.gamma, float(h[l]), rule
                    )
                )
                dofs.append(
                    np.concatenate(
                        [self.dofmap.cell_dofs(OVERLAPPING, ov.cells[k])[0], self.dofmap.cell_dofs(BACKGROUND, bg.cells[l])[0]]
                    )
                )
            if blocks:
                self.buffer.add_blocks(np.array(dofs), np.array(blocks))

    def assemble_neumann(self, conditions: Sequence[NeumannCondition]) -> None:
        with self._phase("standard_assembly"):
            covered = self.data.classes.labels == OverlapClass.COMPLETELY_OVERLAPPED
            for cond in conditions:
                dofs, loads = cond.load(self.data.background, self.dofmap, skip_cells=covered)
                self.buffer.add_vector(dofs, loads)

    def system(self) -> NitscheSystem:
        return NitscheSystem(self.buffer.to_matrix(), self.buffer.rhs.copy(), self.gamma, self.dofmap)

    def finalize(self, dirichlet: Sequence[DirichletCondition] = ()) -> NitscheSystem:
        system = ident_zeros(self.system())
        for cond in dirichlet:
            dofs, values = cond.dofs_and_values(self.data.background, self.dofmap)
            system = apply_dirichlet(system, dofs, values)
        _log.info(
            "Nitsche system: %d dofs (%d active), %d nonzeros, %d inactive rows",
            self.dofmap.num_dofs,
            self.dofmap.num_active,
            system.matrix.nnz,
            len(system.inactive_rows),
        )
        return system

    def assemble(
        self,
        f: Optional[SourceFn] = None,
        dirichlet: Sequence[DirichletCondition] = (),
        neumann: Sequence[NeumannCondition] = (),
    ) -> NitscheSystem:
        self.build_quadrature()
        self.assemble_background(f)
        self.assemble_cut_cells(f)
        self.assemble_overlapping(f)
        self.assemble_interface()
        self.assemble_neumann(neumann)
        return self.finalize(dirichlet)


def assemble_poisson(
    data: OverlapData,
    f: Optional[SourceFn],
    gamma: float = 50.0,
    dirichlet: Sequence[DirichletCondition] = (),
    neumann: Sequence[NeumannCondition] = (),
    flux_side: int = 2,
    timings: Optional[Dict[str, float]] = None,
) -> NitscheSystem:
    """Scalar Poisson problem on the overlapping mesh pair."""
    assembler = NitscheAssembler(data, PoissonForm(flux_side=flux_side), gamma, timings)
    return assembler.assemble(f, dirichlet, neumann)


def assemble_elasticity(
    data: OverlapData,
    materials: MaterialParams,
    f: Optional[SourceFn] = None,
    gamma: float = 50.0,
    dirichlet: Sequence[DirichletCondition] = (),
    traction: Sequence[NeumannCondition] = (),
    flux_side: int = 1,
    timings: Optional[Dict[str, float]] = None,
) -> NitscheSystem:
    """Linear elasticity with per-subdomain materials on the overlapping mesh pair."""
    assembler = NitscheAssembler(data, ElasticityForm(materials, flux_side=flux_side), gamma, timings)
    return assembler.assemble(f, dirichlet, traction)


def assemble_standard(
    mesh: TetMesh,
    form: Form,
    f: Optional[SourceFn] = None,
    dirichlet: Sequence[DirichletCondition] = (),
    neumann: Sequence[NeumannCondition] = (),
    timings: Optional[Dict[str, float]] = None,
) -> NitscheSystem:
    """Plain single-mesh P1 assembly; the reference the coupled system is compared with."""
    timings = {} if timings is None else timings
    start = time.perf_counter()
    dofmap = DofMap(mesh.num_vertices, 0, form.value_dim)
    buffer = TripletBuffer(dofmap.num_dofs)
    points = mesh.cell_points()
    grads, vol = cell_gradients(points)
    dofs = dofmap.cell_dofs(BACKGROUND, mesh.cells)
    buffer.add_blocks(dofs, form.stiffness(grads, vol, 0))
    if f is not None:
        buffer.add_vector(dofs, load_vectors(points, form, f, tet_rule(2)))
    for cond in neumann:
        facet_dofs, loads = cond.load(mesh, dofmap)
        buffer.add_vector(facet_dofs, loads)
    system = NitscheSystem(buffer.to_matrix(), buffer.rhs.copy(), 0.0, dofmap)
    timings["standard_assembly"] = timings.get("standard_assembly", 0.0) + time.perf_counter() - start

    system = ident_zeros(system)
    for cond in dirichlet:
        bc_dofs, values = cond.dofs_and_values(mesh, dofmap)
        system = apply_dirichlet(system, bc_dofs, values)
    return system
