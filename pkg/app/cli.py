# app/cli.py

import sys
import logging
import argparse
from pathlib import Path
from typing import List, Dict, Any, Optional

from app.boot.load_settings import AppConfigLoader
from app.errors import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    ConfigurationError,
    DegenerateGeometryError,
    IndefiniteMatrixError,
    InternalConsistencyError,
    InvalidArgumentError,
    MeshParseError,
)
from app.orchestration.session_state import PHASES, RunConfig
from app.orchestration.studies import bench, elasticity_demo, intersect_report, poisson_convergence


# ──────────────────────────────────────────────────────────────────────────────
# UI helpers
# ──────────────────────────────────────────────────────────────────────────────

def _box(title: str) -> str:
    """Return a single-line title in a lightweight box."""
    pad = f"  {title.strip()}  "
    return f"┌{'─' * len(pad)}┐\n│{pad}│\n└{'─' * len(pad)}┘"

def _rule(text: str = "") -> str:
    """Horizontal rule with optional label."""
    label = f" {text.strip()} " if text else ""
    line = "─" * max(4, 72 - len(label))
    return f"{label}{line}"

def _print_table(title: str, rows: Dict[str, Any]) -> None:
    print(_box(title))
    for key, value in rows.items():
        shown = f"{value:.6g}" if isinstance(value, float) else f"{value}"
        print(f"• {key:<28} | {shown}")
    print(_rule())


# ──────────────────────────────────────────────────────────────────────────────
# Logging
# ──────────────────────────────────────────────────────────────────────────────

def setup_logging(runtime_cfg: Dict[str, Any], *, verbose: bool = False, debug: bool = False) -> None:
    """
    Initialize application logging using config values and verbosity flags.

    Args:
        runtime_cfg: Merged configuration dictionary.
        verbose: If True, log INFO and above to console.
        debug: If True, log DEBUG and above to console (overrides verbose).
    """
    log_cfg = runtime_cfg.get("logging", {})
    fmt = log_cfg.get("format", "%(asctime)s | %(levelname)s | %(name)s | %(message)s")
    logfile = log_cfg.get("file", "logs/overlapmesh.log")
    base_level = str(log_cfg.get("level", "WARNING")).upper()

    if debug:
        level = logging.DEBUG
    elif verbose:
        level = logging.INFO
    else:
        level = getattr(logging, base_level, logging.WARNING)

    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(level)

    formatter = logging.Formatter(fmt)

    if verbose or debug:
        ch = logging.StreamHandler()
        ch.setFormatter(formatter)
        root.addHandler(ch)

    if logfile:
        Path(logfile).parent.mkdir(parents=True, exist_ok=True)
        fh = logging.FileHandler(logfile)
        fh.setFormatter(formatter)
        root.addHandler(fh)


# ──────────────────────────────────────────────────────────────────────────────
# Commands
# ──────────────────────────────────────────────────────────────────────────────

def cmd_poisson(config: RunConfig) -> int:
    df, rates = poisson_convergence(config)
    print(_box(f"Poisson convergence • N = {', '.join(str(n) for n in config.n_list)}"))
    print(df[["N", "dofs", "L2", "H1", "jump", "iterations", "converged"]].to_string(index=False))
    print(_rule(" rates "))
    print(f"L2 {rates['L2']:.3f}   H1 {rates['H1']:.3f}")
    print(_rule())
    return EXIT_OK


def cmd_elasticity(config: RunConfig) -> int:
    summary = elasticity_demo(config)
    keys = ("n", "dofs", "max_u", "jump_l2", "jump_rms", "iterations", "converged", "propeller_volume")
    _print_table("Elasticity • propeller", {k: summary[k] for k in keys})
    return EXIT_OK


def cmd_bench(config: RunConfig) -> int:
    df, slopes = bench(config)
    print(_box(f"Benchmark • {config.reps} repetitions"))
    print(df.to_string(index=False))
    _print_table("Scaling slopes", slopes)
    return EXIT_OK


def cmd_intersect(config: RunConfig, mesh0: Optional[str], mesh2: Optional[str], dump_off: bool) -> int:
    if (mesh0 is None) != (mesh2 is None):
        raise ConfigurationError("--mesh0 and --mesh2 must be given together")
    df = intersect_report(config, mesh0, mesh2, dump_off)
    row = df.iloc[0].to_dict()
    keys = (
        "not_overlapped",
        "completely_overlapped",
        "partially_overlapped",
        "visible_volume",
        "interface_area",
        "facet_parts",
        "small_cells",
    )
    _print_table("Overlap report", {k: row[k] for k in keys})
    return EXIT_OK


# ──────────────────────────────────────────────────────────────────────────────
# CLI
# ──────────────────────────────────────────────────────────────────────────────

def _int_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty N list")
    return values


def _phase_list(text: str) -> List[str]:
    names = [v.strip() for v in text.split(",") if v.strip()]
    unknown = [n for n in names if n not in PHASES]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown phases {unknown}; choose from {', '.join(PHASES)}")
    return names


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=_int_list, default=None, help="Comma-separated background resolutions, e.g. 8,12,16")
    p.add_argument("--gamma", type=float, default=None, help="Nitsche penalty parameter (overrides settings file)")
    p.add_argument("--out", default=None, help="Output directory for CSV/VTK/OFF files")
    p.add_argument("--seed", type=int, default=None, help="Seed for ray directions in cell classification")
    p.add_argument("--phases", type=_phase_list, default=None, help="Comma-separated phases to report timings for")
    p.add_argument("-v", "--verbose", action="store_true", help="Verbose logs to console")
    p.add_argument("--debug", action="store_true", help="Debug logs (most detailed)")


def build_parser() -> argparse.ArgumentParser:
    """
    Build and return the CLI argument parser.
    """
    parser = argparse.ArgumentParser(description="Nitsche finite elements on overlapping tetrahedral meshes")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p_poisson = subparsers.add_parser("poisson", help="Poisson convergence study on a rotated inner cube")
    _common(p_poisson)

    p_elast = subparsers.add_parser("elasticity", help="Propeller elasticity demo (VTK + summary CSV)")
    _common(p_elast)

    p_bench = subparsers.add_parser("bench", help="Per-phase timing breakdown, averaged over repetitions")
    _common(p_bench)
    p_bench.add_argument("--reps", type=int, default=None, help="Repetitions per N (default from settings)")

    p_inter = subparsers.add_parser("intersect", help="Overlap report of two meshes")
    _common(p_inter)
    p_inter.add_argument("--mesh0", default=None, help="Background mesh file (tetmesh format)")
    p_inter.add_argument("--mesh2", default=None, help="Overlapping mesh file (tetmesh format)")
    p_inter.add_argument("--dump-off", action="store_true", help="Write interface parts and cut pieces as OFF files")

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one subcommand and return its exit code.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    # Merge config
    settings_loader = AppConfigLoader()
    cfg = settings_loader.merge_with_args(args)

    # Logging
    setup_logging(cfg, verbose=args.verbose, debug=args.debug)

    try:
        config = RunConfig.from_settings(cfg, args.command)
        logging.info("Run configuration: %s", config)
        if args.command == "poisson":
            return cmd_poisson(config)
        if args.command == "elasticity":
            return cmd_elasticity(config)
        if args.command == "bench":
            return cmd_bench(config)
        if args.command == "intersect":
            return cmd_intersect(config, args.mesh0, args.mesh2, args.dump_off)
    except (ConfigurationError, MeshParseError, InvalidArgumentError) as exc:
        logging.error("Configuration error: %s", exc, exc_info=True)
        print(_box("Configuration error"))
        print(f"Reason: {exc}")
        return EXIT_CONFIG
    except (DegenerateGeometryError, IndefiniteMatrixError, InternalConsistencyError) as exc:
        logging.error("Numerical failure: %s", exc, exc_info=True)
        print(_box("Numerical failure"))
        print(f"Reason: {exc}")
        return EXIT_NUMERICAL

    parser.print_help()
    return EXIT_CONFIG


def main() -> None:
    """
    Main entry point for the overlapmesh CLI.
    """
    sys.exit(run())


if __name__ == "__main__":
    main()
