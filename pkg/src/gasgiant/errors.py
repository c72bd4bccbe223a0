"""Exception types raised across the package."""


class GasGiantError(Exception):
    """Base class for all package errors."""


class MetricError(GasGiantError):
    """Invalid metric data: bad alpha, dimension, or a point outside the collar."""


class NotPositiveDefiniteError(MetricError):
    """The boundary family h(x, y) lost positive definiteness."""


class AlphaMismatchError(MetricError):
    """A declared alpha disagrees with the exponent measured from a profile."""


class FlowError(GasGiantError):
    """A geodesic integration could not be completed as requested."""


class ConvergenceError(GasGiantError):
    """An iterative solver (shooting, root finding, eigen-solver) failed."""


class NonUniqueError(GasGiantError):
    """More than one geodesic connects the requested boundary points."""


class FitError(GasGiantError):
    """A log-log fit was requested on unusable samples."""


class ConfigError(GasGiantError):
    """An experiment or CLI configuration is malformed."""
