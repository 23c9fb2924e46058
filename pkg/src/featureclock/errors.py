"""Exception and warning types shared across the package."""


class FeatureClockError(Exception):
    """Base class for all errors raised by this package."""


class InputDataError(FeatureClockError):
    """Malformed input files or invalid run options (CLI exit code 2)."""


class ComputationError(FeatureClockError):
    """A numerical routine could not produce a valid result (CLI exit code 3)."""


class GroupTooSmallError(ComputationError):
    """A point group has too few members to fit the axis regressions."""


class ClockWarning(UserWarning):
    """Non-fatal conditions: dropped features, skipped groups, adjusted options."""
