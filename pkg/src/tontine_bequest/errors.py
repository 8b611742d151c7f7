"""Exception types shared across the package.

Input validation problems raise the builtin ``ValueError``. Everything that
goes wrong *numerically* derives from :class:`NumericalError`, which lets the
command line map the two families onto different exit codes.
"""


class NumericalError(RuntimeError):
    """Base class for failures of a numerical procedure on valid inputs."""


class DivergenceError(NumericalError):
    """An improper integral could not be bounded within tolerance.

    Raised when the analytic tail bound of an exponential moment stays above
    the requested tolerance up to the maximum integration horizon, which is
    how an infinite moment shows up numerically.
    """

    def __init__(self, message, horizon=None, tail_bound=None):
        super().__init__(message)
        self.horizon = horizon
        self.tail_bound = tail_bound


class QuadratureError(NumericalError):
    """Adaptive quadrature exhausted its subdivision budget."""


class DegenerateMortalityError(NumericalError):
    """The moment ratio kappa has a vanishing denominator."""


class ConvergenceError(NumericalError):
    """An iterative solver or optimizer failed to reach its tolerance."""


class ChiniCrossingError(NumericalError):
    """The backward Chini integration left the region where gamma*h > 0."""

    def __init__(self, message, crossing_time):
        super().__init__(message)
        self.crossing_time = crossing_time


class InfiniteValueError(NumericalError):
    """The power-utility value is not finite (or degenerate) for these inputs."""

    def __init__(self, message, classification):
        super().__init__(message)
        self.classification = classification
