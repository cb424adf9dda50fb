"""Exception and warning classes shared across the package."""


class QBatteryError(Exception):
    """Base class for all package errors."""


class DegenerateCouplingError(QBatteryError, ValueError):
    """Raised when N0 is requested but the cavity coupling g vanishes."""


class SelectivityError(QBatteryError, ValueError):
    """Raised when a high-selectivity construction is asked for a non-integer N0."""


class UnderResolvedError(QBatteryError, ValueError):
    """Raised when an integration step cannot resolve the fastest phase."""


class NormalizationError(QBatteryError, RuntimeError):
    """Raised when a probability vector drifts away from unit total weight."""


class LeakageError(QBatteryError, RuntimeError):
    """Raised when too much probability sits at the top of a truncated Fock space."""


class TruncationWarning(UserWarning):
    """Emitted when a truncated Fock space holds non-negligible weight near its edge."""
