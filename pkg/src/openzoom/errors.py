"""Exception hierarchy shared by all openzoom modules."""

from __future__ import annotations


class OpenZoomError(Exception):
    """Base class for computational errors (CLI exit status 1)."""


class EvaluationError(OpenZoomError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class CriticalProximityError(EvaluationError):
    """An orbit point came within machine tolerance of the critical set."""


class PreconditionError(OpenZoomError, ValueError):
    pass


class InvarianceError(OpenZoomError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class MetricError(OpenZoomError):
    def __init__(self, message: str, pair: tuple[int, int] | None = None):
        super().__init__(message)
        self.pair = pair


class ContractionError(OpenZoomError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class FixedPointError(OpenZoomError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class ItineraryError(OpenZoomError):
    """Pulling a ball back along an itinerary left the branch domain."""


class RadiusError(OpenZoomError, ValueError):
    pass


class GeometryError(OpenZoomError, ValueError):
    def __init__(self, message: str, pair: tuple[int, int] | None = None):
        super().__init__(message)
        self.pair = pair


class DegenerateEstimateError(OpenZoomError):
    pass


class AlignmentError(OpenZoomError, ValueError):
    pass


class DiscretizationError(OpenZoomError):
    pass


class CoverageError(OpenZoomError):
    def __init__(self, message: str, coverage: float):
        super().__init__(message)
        self.coverage = coverage


class DomainError(OpenZoomError, ValueError):
    pass


class CapError(OpenZoomError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class CapabilityError(OpenZoomError):
    pass


class ConvergenceError(OpenZoomError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class UndersamplingError(OpenZoomError):
    def __init__(self, message: str, largest_usable_n: int):
        super().__init__(message)
        self.largest_usable_n = largest_usable_n


class ClassificationError(OpenZoomError):
    def __init__(self, message: str, counts: tuple[int, int]):
        super().__init__(message)
        self.counts = counts


class RefinementError(OpenZoomError, ValueError):
    pass


class ProjectionError(OpenZoomError):
    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


class ConfigError(Exception):
    """Invalid experiment configuration (CLI exit status 2)."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field
