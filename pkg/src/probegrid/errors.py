"""Exception types raised by the probe-grid engine."""


class ProbeGridError(Exception):
    """Base class for all engine errors."""


class ValidationError(ProbeGridError):
    """Input data violates a format or consistency rule."""


class DegenerateInputError(ProbeGridError):
    """Too few usable rows to fit anything (fewer than 2 train rows)."""


class SingularDesignError(ProbeGridError):
    """Factorization failed at every ridge level in the schedule."""


class AbortRun(ProbeGridError):
    """Raised by a progress callback to stop a grid run; partial output is kept."""
