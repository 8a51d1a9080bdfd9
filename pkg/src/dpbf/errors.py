"""Exception hierarchy for the dpbf package."""


class DpbfError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(DpbfError, ValueError):
    """A constructor or operation argument violates its preconditions."""


class InvalidCoordinateError(InvalidParameterError):
    """A tree coordinate is outside the valid (level, index) domain."""


class OutOfUniverseError(DpbfError, ValueError):
    """An element id lies outside the configured universe [0, |U|)."""


class ParameterMismatchError(DpbfError, ValueError):
    """Two filters with different parameters were combined."""


class CorruptPayloadError(DpbfError, ValueError):
    """A serialized filter payload is malformed or violates invariants."""


class CapacityError(InvalidParameterError):
    """A workload request exceeds the universe capacity."""
