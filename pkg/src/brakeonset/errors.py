"""Exception hierarchy.

Data-shaped failures (a window that holds too few samples, a flat signal,
an empty grid) are raised by the low-level primitives and converted to
typed missing values by :mod:`brakeonset.pipeline`.
"""


class BrakeOnsetError(Exception):
    """Base class for every error raised by this package."""


class SeriesError(BrakeOnsetError, ValueError):
    """A kinematic series violates its invariants."""


class EmptyWindowError(BrakeOnsetError):
    """Fewer samples than required fall inside a time window."""


class InvalidWindowError(BrakeOnsetError):
    """The fit window collapsed (``t_end <= t_start``)."""


class EmptyGridError(BrakeOnsetError):
    """A search-grid axis has no admissible values."""


class DegenerateVarianceError(BrakeOnsetError):
    """A signal has zero variance, so R² or correlation is undefined."""


class UndefinedRateError(BrakeOnsetError):
    """TPR or FPR is undefined because one actual class is empty."""


class DuplicateEventIdError(BrakeOnsetError, ValueError):
    """Two events in one batch share an ``event_id``."""


class ManifestParseError(BrakeOnsetError):
    """The event manifest cannot be read or fails schema validation."""
