"""Exception hierarchy shared across the package."""


class EmdecError(Exception):
    """Base class for all package errors."""


class MeshError(EmdecError):
    """Invalid mesh topology or geometry."""


class MeshParseError(MeshError):
    """Mesh file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonManifoldError(MeshError):
    """A codimension-1 cell has more than two top-cell cofaces."""


class DegenerateMeshError(MeshError):
    """A cell has no well-defined circumcenter or zero measure."""


class ConfigError(EmdecError):
    """Invalid run configuration; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ExpressionError(ConfigError):
    """Source expression failed to parse or evaluate."""


class NumericError(EmdecError):
    """Numerical failure during a run (instability, non-convergence)."""
