__all__ = [
    "assembly",
    "backends",
    "boot",
    "geometry",
    "meshing",
    "orchestration",
    "overlap",
    "quadrature",
    "search",
]
__version__ = "0.3.0"
