# app/orchestration/studies.py

"""
Study drivers behind the CLI subcommands. Each returns a pandas DataFrame
(or a summary dict) and writes its CSV files into config.out_dir.
"""

import logging
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.assembly.dofmap import write_solution_vtk
from app.assembly.nitsche import assemble_standard
from app.errors import ConfigurationError
from app.meshing.mesh_io import read_mesh, write_mesh, write_off_blocks
from app.meshing.tet_mesh import TetMesh, boundary, unit_cube_mesh
from app.orchestration.problems import inner_cube_mesh, make_problem
from app.orchestration.run_once import run_pipeline_once
from app.orchestration.session_state import RunConfig, RunState, TimingBreakdown
from app.overlap.overlapping_meshes import build_overlap, overlap_off_blocks, overlap_summary
from app.search.aabb_tree import write_tree_vtk

_log = logging.getLogger(__name__)


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log(y) against log(x); NaN with fewer than two positive points."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    ok = (x > 0.0) & (y > 0.0)
    if ok.sum() < 2 or np.unique(x[ok]).size < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def _counts(state: RunState) -> Dict[str, int]:
    summary = overlap_summary(state["overlap_data"])
    return {
        "background_cells": summary["background_cells"],
        "overlapping_cells": summary["overlapping_cells"],
        "partially_overlapped": summary["partially_overlapped"],
        "facet_parts": summary["facet_parts"],
    }


# ──────────────────────────────────────────────────────────────────────────────
# Poisson convergence
# ──────────────────────────────────────────────────────────────────────────────

def poisson_convergence(config: RunConfig) -> Tuple[pd.DataFrame, Dict[str, float]]:
    """
    Solve the manufactured Poisson problem for every N in config.n_list.

    Writes poisson_convergence.csv (one row per N), poisson_rates.csv (fitted
    L2/H1 rates against h) and VTK files of the finest run.
    """
    out = _out_dir(config)
    rows: List[Dict[str, float]] = []
    last: Optional[RunState] = None
    for n in sorted(config.n_list):
        state = run_pipeline_once(config, "poisson", n)
        data, report, errors = state["overlap_data"], state["report"], state["results"]
        dofmap = state["system"].dofmap
        summary = overlap_summary(data)
        volume = summary["visible_volume"] + data.overlapping.total_volume()
        rows.append(
            {
                "N": n,
                "h": 1.0 / n,
                "dofs": dofmap.num_dofs,
                "active_dofs": dofmap.num_active,
                "L2": errors.l2,
                "H1": errors.h1,
                "jump": errors.jump,
                "iterations": report.iterations,
                "residual": report.residual,
                "converged": report.converged,
                "partially_overlapped": summary["partially_overlapped"],
                "small_cells": summary["small_cells"],
                "volume_error": abs(volume - data.background.total_volume()),
                **TimingBreakdown.from_timings(state["timings"]).as_row(config.phases),
            }
        )
        if not report.converged:
            _log.warning("N=%d marked as not converged in the report", n)
        last = state

    df = pd.DataFrame(rows)
    rates = {"L2": fit_slope(df["h"], df["L2"]), "H1": fit_slope(df["h"], df["H1"])}
    df.to_csv(out / "poisson_convergence.csv", index=False)
    pd.DataFrame([rates]).to_csv(out / "poisson_rates.csv", index=False)
    if last is not None:
        data = last["overlap_data"]
        write_solution_vtk(
            last["solution"],
            last["system"].dofmap,
            data.background,
            data.overlapping,
            out,
            prefix=f"poisson_N{last['n']}",
            extra_background={"overlap_class": data.classes.labels.astype(np.int32)},
        )
    _log.info("Poisson rates: L2 %.2f, H1 %.2f", rates["L2"], rates["H1"])
    return df, rates


# ──────────────────────────────────────────────────────────────────────────────
# Elasticity demo
# ──────────────────────────────────────────────────────────────────────────────

def elasticity_demo(config: RunConfig) -> Dict[str, float]:
    """
    Propeller in a clamped, twisted box. Writes elasticity_background.vtk,
    elasticity_overlapping.vtk and elasticity_summary.csv.
    """
    out = _out_dir(config)
    state = run_pipeline_once(config, "elasticity", config.elasticity_n)
    data, report = state["overlap_data"], state["report"]
    write_solution_vtk(
        state["solution"],
        state["system"].dofmap,
        data.background,
        data.overlapping,
        out,
        prefix="elasticity",
        extra_background={"overlap_class": data.classes.labels.astype(np.int32)},
    )
    summary = {
        "n": config.elasticity_n,
        "dofs": state["system"].dofmap.num_dofs,
        "iterations": report.iterations,
        "residual": report.residual,
        "converged": report.converged,
        "propeller_volume": data.overlapping.total_volume(),
        **state["results"],
        **TimingBreakdown.from_timings(state["timings"]).as_row(config.phases),
    }
    pd.DataFrame([summary]).to_csv(out / "elasticity_summary.csv", index=False)
    _log.info("Elasticity: max |u| %.4e, RMS jump %.3e", summary["max_u"], summary["jump_rms"])
    return summary


# ──────────────────────────────────────────────────────────────────────────────
# Benchmark
# ──────────────────────────────────────────────────────────────────────────────

def bench(config: RunConfig) -> Tuple[pd.DataFrame, Dict[str, float]]:
    """
    Time every phase of the Poisson configuration, config.reps times per N.

    Rows are averaged per N. Alongside the phases, `standard_only` is the
    time of a plain single-mesh assembly of the background, and
    `assembly_ratio` the coupled assembly time divided by it. Writes
    bench.csv and bench_slopes.csv (time against the entity count each
    phase loops over).
    """
    out = _out_dir(config)
    rows: List[Dict[str, float]] = []
    for n in sorted(config.n_list):
        problem = make_problem(config, "poisson", n)
        for rep in range(config.reps):
            state = run_pipeline_once(config, "poisson", n, until="solve", problem_def=problem)
            timing = TimingBreakdown.from_timings(state["timings"], **_counts(state))
            reference: Dict[str, float] = {}
            assemble_standard(problem.background, problem.form, problem.source, timings=reference)
            standard_only = reference["standard_assembly"]
            row = {"N": n, "rep": rep, **timing.as_row(config.phases)}
            row["assembly_total"] = timing.assembly_total
            row["geometry_total"] = timing.geometry_total
            row["standard_only"] = standard_only
            row["assembly_ratio"] = timing.assembly_total / standard_only if standard_only > 0.0 else float("nan")
            rows.append(row)
        _log.info("bench N=%d: %d repetitions done", n, config.reps)

    df = pd.DataFrame(rows).groupby("N", as_index=False).mean(numeric_only=True).drop(columns="rep")
    slopes = {}
    for phase, count in (
        ("standard_assembly", "background_cells"),
        ("cut_assembly", "partially_overlapped"),
        ("interface_assembly", "facet_parts"),
        ("cut_cells", "partially_overlapped"),
        ("interface", "facet_parts"),
    ):
        if phase in df.columns:
            slopes[f"{phase}_vs_{count}"] = fit_slope(df[count], df[phase])
    slopes["cut_cells_vs_background_cells"] = fit_slope(df["background_cells"], df["partially_overlapped"])
    df.to_csv(out / "bench.csv", index=False)
    pd.DataFrame([slopes]).to_csv(out / "bench_slopes.csv", index=False)
    return df, slopes


# ──────────────────────────────────────────────────────────────────────────────
# Intersection report
# ──────────────────────────────────────────────────────────────────────────────

def _require_watertight(mesh: TetMesh, label: str) -> None:
    surf = boundary(mesh)
    if not surf.is_watertight():
        raise ConfigurationError(f"Overlapping mesh {label} does not have a watertight boundary")


def intersect_report(
    config: RunConfig,
    mesh0: Optional[str] = None,
    mesh2: Optional[str] = None,
    dump_off: bool = False,
) -> pd.DataFrame:
    """
    Overlap statistics of a mesh pair: the two files when given, otherwise
    the Poisson pair at N = config.n_list[0] (written out as .tetmesh files).

    With `dump_off`, the interface facet parts and the covered cut-cell
    pieces are written as OFF files, and the background tree as VTK boxes.
    """
    out = _out_dir(config)
    n = config.n_list[0]
    if mesh0 is not None:
        background = read_mesh(mesh0)
    else:
        background = unit_cube_mesh(n)
        write_mesh(background, out / "mesh0.tetmesh")
    if mesh2 is not None:
        overlapping = read_mesh(mesh2)
    else:
        overlapping = inner_cube_mesh(config, n)
        write_mesh(overlapping, out / "mesh2.tetmesh")
    _require_watertight(overlapping, mesh2 or "(generated)")

    timings: Dict[str, float] = {}
    start = time.perf_counter()
    data = build_overlap(
        background, overlapping, seed=config.seed, small_cut_threshold=config.small_cut_threshold, timings=timings
    )
    elapsed = time.perf_counter() - start
    summary = overlap_summary(data)
    row = {
        **summary,
        "overlapping_volume": overlapping.total_volume(),
        "volume_defect": abs(summary["visible_volume"] + overlapping.total_volume() - background.total_volume()),
        "surface_area": data.surface.total_area(),
        "area_defect": abs(summary["interface_area"] - data.surface.total_area()),
        "elapsed": elapsed,
        **{k: v for k, v in timings.items() if not config.phases or k in config.phases},
    }
    if dump_off:
        parts, pieces = overlap_off_blocks(data)
        row["off_parts"] = write_off_blocks(parts, out / "interface_parts.off")
        row["off_pieces"] = write_off_blocks(pieces, out / "cut_pieces.off")
        row["tree_boxes"] = write_tree_vtk(data.background_tree, out / "background_tree.vtk")
    df = pd.DataFrame([row])
    df.to_csv(out / "intersect.csv", index=False)
    return df
