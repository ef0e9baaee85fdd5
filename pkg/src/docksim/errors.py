"""Exception hierarchy shared across the package.

Every failure the library can signal deliberately derives from
:class:`DockingError` so callers (and the CLI) can catch one base class.
"""


class DockingError(Exception):
    """Base class for all docking related errors."""


class DomainError(DockingError):
    """Input outside the mathematical domain of an operation.

    Raised for non-finite values and for degenerate geometry such as a
    zero robot-to-landmark distance or a camera sitting exactly on the
    objective point.
    """


class ConfigError(DockingError):
    """Invalid or inconsistent configuration data."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class InfeasibleGainsError(DockingError):
    """Gain synthesis impossible for the given camera/landmark geometry."""


class NoObjectError(DockingError):
    """No cluster survived filtering, nothing to dock to."""


class NotAChairError(DockingError):
    """Selected cluster lacks a bottom or back part at the height split."""


class CloudFormatError(DockingError):
    """Point cloud file cannot be parsed."""


class BoundaryFitError(DockingError):
    """No sound boundary could be fitted to the feasibility labels."""


class PhaseError(DockingError):
    """Estimator operation not allowed in its current phase."""
