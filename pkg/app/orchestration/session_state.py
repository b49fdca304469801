# app/orchestration/session_state.py

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional, Tuple, TypedDict

import numpy as np

from app.errors import ConfigurationError

SUBCOMMANDS = ("poisson", "elasticity", "bench", "intersect")


@dataclass(frozen=True)
class RunConfig:
    """
    Validated run parameters, built from the merged settings dict.

    Invariants: every N >= 4, gamma > 0, reps >= 1.
    """

    subcommand: str = "poisson"
    n_list: Tuple[int, ...] = (8, 12, 16, 24)
    gamma: float = 50.0
    out_dir: str = "out"
    seed: int = 7
    reps: int = 10
    max_n: int = 32
    phases: Optional[Tuple[str, ...]] = None
    # solver
    tol: float = 1e-10
    max_iter_factor: int = 10
    preconditioner: str = "jacobi"
    # poisson
    omega2_lo: float = 0.3331
    omega2_hi: float = 0.6669
    rotation_axis: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    rotation_deg: float = 20.0
    translation: Tuple[float, float, float] = (0.01, -0.005, 0.0075)
    aligned: bool = False
    poisson_flux_side: int = 2
    # elasticity
    elasticity_n: int = 12
    propeller_cells: int = 10
    E1: float = 10.0
    E2_ratio: float = 0.1
    nu1: float = 0.3
    nu2: float = 0.3
    elasticity_flux_side: int = 1
    # geometry
    small_cut_threshold: float = 1e-15

    def __post_init__(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigurationError(f"Unknown subcommand '{self.subcommand}'")
        if not self.n_list:
            raise ConfigurationError("N list is empty")
        bad = [n for n in self.n_list if int(n) < 4]
        if bad or self.elasticity_n < 4:
            raise ConfigurationError(f"Every N must be >= 4, got {list(self.n_list)} / elasticity n {self.elasticity_n}")
        too_big = [n for n in self.n_list if int(n) > self.max_n]
        if too_big:
            raise ConfigurationError(f"N {too_big} exceeds max_n {self.max_n}; raise run.max_n to allow it")
        if not self.gamma > 0.0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if self.reps < 1:
            raise ConfigurationError(f"reps must be >= 1, got {self.reps}")
        if not self.omega2_lo < self.omega2_hi:
            raise ConfigurationError("poisson.omega2_lo must be below omega2_hi")
        if self.poisson_flux_side not in (1, 2) or self.elasticity_flux_side not in (1, 2):
            raise ConfigurationError("flux_side must be 1 or 2")

    @classmethod
    def from_settings(cls, cfg: Dict[str, Any], subcommand: str) -> "RunConfig":
        run = cfg.get("run", {}) or {}
        solver = cfg.get("solver", {}) or {}
        poisson = cfg.get("poisson", {}) or {}
        elast = cfg.get("elasticity", {}) or {}
        geom = cfg.get("geometry", {}) or {}
        d = cls()
        try:
            phases = run.get("phases")
            return cls(
                subcommand=subcommand,
                n_list=tuple(int(n) for n in run.get("n_list", d.n_list)),
                gamma=float(run.get("gamma", d.gamma)),
                out_dir=str(run.get("out_dir", d.out_dir)),
                seed=int(run.get("seed", d.seed)),
                reps=int(run.get("reps", d.reps)),
                max_n=int(run.get("max_n", d.max_n)),
                phases=tuple(phases) if phases else None,
                tol=float(solver.get("tol", d.tol)),
                max_iter_factor=int(solver.get("max_iter_factor", d.max_iter_factor)),
                preconditioner=str(solver.get("preconditioner", d.preconditioner)),
                omega2_lo=float(poisson.get("omega2_lo", d.omega2_lo)),
                omega2_hi=float(poisson.get("omega2_hi", d.omega2_hi)),
                rotation_axis=tuple(float(v) for v in poisson.get("rotation_axis", d.rotation_axis)),
                rotation_deg=float(poisson.get("rotation_deg", d.rotation_deg)),
                translation=tuple(float(v) for v in poisson.get("translation", d.translation)),
                aligned=bool(poisson.get("aligned", d.aligned)),
                poisson_flux_side=int(poisson.get("flux_side", d.poisson_flux_side)),
                elasticity_n=int(elast.get("n", d.elasticity_n)),
                propeller_cells=int(elast.get("propeller_cells", d.propeller_cells)),
                E1=float(elast.get("E1", d.E1)),
                E2_ratio=float(elast.get("E2_ratio", d.E2_ratio)),
                nu1=float(elast.get("nu1", d.nu1)),
                nu2=float(elast.get("nu2", d.nu2)),
                elasticity_flux_side=int(elast.get("flux_side", d.elasticity_flux_side)),
                small_cut_threshold=float(geom.get("small_cut_threshold", d.small_cut_threshold)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"Invalid settings value: {exc}") from exc


PHASES = (
    "tree_build",
    "collision",
    "classification",
    "interface",
    "cut_cells",
    "quadrature",
    "standard_assembly",
    "cut_assembly",
    "interface_assembly",
    "solve",
)


@dataclass
class TimingBreakdown:
    """Wall time per phase (seconds) and the entity counts the phases scale with."""

    tree_build: float = 0.0
    collision: float = 0.0
    classification: float = 0.0
    interface: float = 0.0
    cut_cells: float = 0.0
    quadrature: float = 0.0
    standard_assembly: float = 0.0
    cut_assembly: float = 0.0
    interface_assembly: float = 0.0
    solve: float = 0.0
    background_cells: int = 0
    overlapping_cells: int = 0
    partially_overlapped: int = 0
    facet_parts: int = 0

    @classmethod
    def from_timings(cls, timings: Dict[str, float], **counts: int) -> "TimingBreakdown":
        known = {f.name for f in fields(cls)}
        values = {k: max(float(v), 0.0) for k, v in timings.items() if k in PHASES}
        values.update({k: int(v) for k, v in counts.items() if k in known})
        return cls(**values)

    @property
    def geometry_total(self) -> float:
        return self.tree_build + self.collision + self.classification + self.interface + self.cut_cells

    @property
    def assembly_total(self) -> float:
        return self.quadrature + self.standard_assembly + self.cut_assembly + self.interface_assembly

    @property
    def total(self) -> float:
        return sum(getattr(self, p) for p in PHASES)

    def as_row(self, phases: Optional[Tuple[str, ...]] = None) -> Dict[str, float]:
        row = asdict(self)
        if phases:
            row = {k: v for k, v in row.items() if k not in PHASES or k in phases}
        row["total"] = self.total
        return row


class RunState(TypedDict, total=False):
    """
    Scratchpad passed through the stage graph.

    Keys:
        config     : Validated RunConfig.
        problem    : "poisson" or "elasticity".
        n          : Background resolution of this run.
        problem_def: Problem definition (meshes, data, boundary conditions).
        overlap_data: OverlapData of the mesh pair.
        assembler  : NitscheAssembler after its quadrature phase.
        system     : Final NitscheSystem.
        solution   : Global solution vector.
        report     : SolveReport of the linear solve.
        results    : ErrorReport (Poisson) or summary dict (elasticity).
        timings    : Per-phase wall times.
        stage_log  : "name: seconds" entry per executed stage.
    """
    config: RunConfig
    problem: str
    n: int
    problem_def: Any
    overlap_data: Any
    assembler: Any
    system: Any
    solution: np.ndarray
    report: Any
    results: Any
    timings: Dict[str, float]
    stage_log: List[str]
