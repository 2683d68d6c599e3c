"""Semantic exception hierarchy shared across the package."""


class VpdError(Exception):
    """Base class for all package-specific errors."""


class SpaceMismatchError(VpdError, ValueError):
    """Operands live in incompatible metric pair spaces."""


class CapacityError(VpdError, RuntimeError):
    """An exact algorithm was asked to run beyond its enumeration cap."""


class CertificatePreconditionError(VpdError, ValueError):
    """The sign pattern of the target diagram is not basepoint-separated."""


class DegenerateGeometryError(VpdError, ValueError):
    """The certificate lattice spacing collapsed to a non-positive value."""


class GraphGenerationError(VpdError, RuntimeError):
    """Random graph generation failed to produce a usable graph."""
