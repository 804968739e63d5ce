"""Error types shared across the package."""


class HoisynthError(Exception):
    """Base class for package errors."""


class InvalidShapeError(HoisynthError, ValueError):
    """Body shape parameters map to bone scales outside the allowed range."""


class DegenerateRotationError(HoisynthError, ValueError):
    """A 6D rotation input cannot be orthonormalized."""


class HeadingUndefinedError(HoisynthError, ValueError):
    """The horizontal heading of a pose is numerically undefined."""


class TrajectoryLengthError(HoisynthError, ValueError):
    """A trajectory violates a length bound."""


class ScheduleError(HoisynthError, ValueError):
    """Invalid noise-schedule parameters."""


class GuidanceError(HoisynthError, ValueError):
    """Guidance produced a non-finite gradient."""


class TemplateError(HoisynthError, ValueError):
    """An object template lacks a required annotation."""


class DataError(HoisynthError, ValueError):
    """A dataset or input collection is empty or inconsistent."""


class ModelStateError(HoisynthError, RuntimeError):
    """A model is used before it has been trained or loaded."""
