"""Exception types shared across the package."""


class RobustResolveError(Exception):
    """Base class for all package errors."""


class DomainError(RobustResolveError, ValueError):
    """A parameter lies outside its admissible range (e.g. alpha > 1/2)."""


class IntegrandError(RobustResolveError, ValueError):
    """Integrand is not finite at some quadrature node."""


class NoRoot(RobustResolveError):
    """The supplied bracket does not contain a sign change."""

    def __init__(self, message, fa=None, fb=None):
        super().__init__(message)
        self.fa = fa
        self.fb = fb


class Infeasible(RobustResolveError):
    """The feasible set of an optimization problem is empty."""


class Unconverged(RobustResolveError):
    """An iterative solver hit its iteration cap before certifying optimality.

    The last iterate and the remaining optimality gap are attached so callers
    can decide whether the point is good enough.
    """

    def __init__(self, message, iterate=None, gap=None):
        super().__init__(message)
        self.iterate = iterate
        self.gap = gap


class ExtrapolationError(RobustResolveError, ValueError):
    """A tabulated density was evaluated outside its table."""


class GridMismatch(RobustResolveError, ValueError):
    """Two discrete distributions do not live on the same grid."""


class MonotonicityError(RobustResolveError):
    """A resolution curve that is inverted by bisection is not monotone."""

    def __init__(self, message, deltas=None, values=None):
        super().__init__(message)
        self.deltas = deltas
        self.values = values


class DegenerateSample(RobustResolveError, ValueError):
    """The estimating equation has no sign change over the data range."""
