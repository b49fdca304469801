# app/errors.py

from typing import Optional, Sequence


class OverlapMeshError(Exception):
    """Base class for every error raised by the overlapmesh package."""


class InvalidArgumentError(OverlapMeshError, ValueError):
    """An input violates an operation's precondition."""


class EmptyMeshError(InvalidArgumentError):
    """A mesh operation would produce (or received) a mesh without cells."""


class ConfigurationError(OverlapMeshError):
    """Run configuration or input files are unusable."""


class MeshParseError(OverlapMeshError):
    """
    Malformed mesh file.

    Attributes:
        path: File being parsed.
        line: 1-based line number where parsing failed.
    """

    def __init__(self, path: str, line: int, message: str) -> None:
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class DegenerateGeometryError(OverlapMeshError):
    """
    Geometry too degenerate to process (flat tets, zero-normal faces,
    unresolvable ray classification).

    Attributes:
        entities: Indices of the offending entities, when known.
    """

    def __init__(self, message: str, entities: Optional[Sequence[int]] = None) -> None:
        if entities:
            message = f"{message} (entities: {', '.join(str(e) for e in entities)})"
        super().__init__(message)
        self.entities = tuple(entities or ())


class IndefiniteMatrixError(OverlapMeshError):
    """Conjugate gradient breakdown: a search direction with p^T A p <= 0."""


class InternalConsistencyError(OverlapMeshError):
    """An internal audit failed."""


# Exit codes of the command line front end.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
