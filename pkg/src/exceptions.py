"""Error kinds raised by the mesh, operator, system and study layers."""

from typing import Optional


class PolyVemError(Exception):
    """Base class for all solver errors."""


class InvalidArgumentError(PolyVemError, ValueError):
    """An argument is outside the accepted range."""


class ConfigError(InvalidArgumentError):
    """Missing or invalid configuration key."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class MeshGenerationError(PolyVemError):
    """Mesh generator could not build a valid mesh."""


class DistortionError(PolyVemError):
    """Vertex distortion inverted at least one element."""


class RefinementError(PolyVemError):
    """Element could not be refined (e.g. centroid outside star kernel)."""


class TopologyError(PolyVemError):
    """Mesh connectivity violates the polygonal mesh invariants."""


class MeshParseError(PolyVemError):
    """Malformed mesh file."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ProjectionError(PolyVemError):
    """Elliptic projection matrix G is singular."""


class AssemblyError(PolyVemError):
    """Inconsistent dof layout or rank-deficient bordered system."""


class SolverError(PolyVemError):
    """Direct factorization failed."""


class QuadratureError(PolyVemError):
    """Quadrature residual above tolerance."""


EXIT_INVALID_ARGUMENT = 2
EXIT_MESH = 3
EXIT_SOLVER = 4
EXIT_STUDY_ROW = 5


def exit_code_for(error: BaseException) -> int:
    """CLI exit code of an error raised by a command."""
    if isinstance(error, (MeshGenerationError, DistortionError, RefinementError,
                          TopologyError, MeshParseError)):
        return EXIT_MESH
    if isinstance(error, (SolverError, ProjectionError, AssemblyError, QuadratureError)):
        return EXIT_SOLVER
    return EXIT_INVALID_ARGUMENT
