"""Exception hierarchy shared by the solver modules."""


class QuadsweError(Exception):
    """Base class for all solver errors."""


class InvalidArgument(QuadsweError, ValueError):
    """An argument is outside its documented domain."""


class PreconditionViolation(QuadsweError):
    """An operation was called on data that does not meet its precondition."""


class CapacityError(QuadsweError):
    """A refinement was requested beyond the maximum quadtree level."""


class DataError(QuadsweError):
    """Input data (bottom samples, rasters, files) is malformed or non-finite."""


class NumericalError(QuadsweError):
    """A NaN or Inf appeared during the computation."""


class PositivityViolation(NumericalError):
    """A water depth became negative beyond roundoff."""


class ConsistencyError(QuadsweError):
    """An internal invariant failed; indicates a logic bug."""


class ConfigError(QuadsweError):
    """A run configuration is invalid."""


class OutputError(QuadsweError, OSError):
    """A file could not be written or read."""
