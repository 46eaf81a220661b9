"""Exception hierarchy shared by all csgauge modules."""

from __future__ import annotations


class CSGaugeError(Exception):
    """Base class for every error raised by csgauge."""


class MeshError(CSGaugeError, ValueError):
    """Malformed mesh or mesh topology unsuited to the operation."""


class UnsupportedDegreeError(CSGaugeError, ValueError):
    pass


class InvalidLoopError(CSGaugeError, ValueError):
    pass


class InvalidRegionError(CSGaugeError, ValueError):
    pass


class ShapeError(CSGaugeError, ValueError):
    """Cochains defined on different meshes or with mismatched sizes."""


class InsufficientStackError(CSGaugeError, ValueError):
    pass


class InvalidMaterialError(CSGaugeError, ValueError):
    pass


class SolverError(CSGaugeError, RuntimeError):
    """Iterative solve did not reach tolerance within the iteration cap."""

    def __init__(self, message: str, residual_history: list[float] | None = None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class DomainError(CSGaugeError, ValueError):
    """Argument outside the domain of a physical formula."""


class ConfigError(CSGaugeError, ValueError):
    pass


class TopologyError(CSGaugeError, ValueError):
    pass


class DegenerateFluxError(CSGaugeError, ValueError):
    pass
