"""Exception types shared across the package."""


class CurvminError(Exception):
    """Base class for package errors."""


class MeshError(CurvminError):
    """Mesh is malformed, degenerate, or violates a topological precondition."""


class ObjFormatError(CurvminError):
    """An OBJ file could not be parsed under the supported v/f subset."""


class ConfigError(CurvminError):
    """A run configuration file is syntactically or semantically invalid."""


class EnergyOverflowError(CurvminError):
    """An energy evaluation overflowed despite log-space accumulation."""
