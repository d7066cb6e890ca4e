"""Exception types raised by the simulator and the audits."""


class WarpFlowError(Exception):
    """Base class for all package errors."""


class DomainError(WarpFlowError, ValueError):
    """A radius left the open interval on which the warping factor is defined."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class ConvergenceError(WarpFlowError, RuntimeError):
    """Root finding or ODE integration missed its tolerance."""


class SizeError(WarpFlowError, ValueError):
    """Node array length does not match the grid."""


class ConeViolation(WarpFlowError, ArithmeticError):
    """Principal curvatures left the admissible cone of the speed function."""

    def __init__(self, message, node=None, kappa=None):
        super().__init__(message)
        self.node = node
        self.kappa = kappa


class MeanConvexityError(WarpFlowError, ValueError):
    """A functional that needs H > 0 was evaluated on a non mean-convex surface."""


class RangeError(WarpFlowError, ValueError):
    """Inverse lookup outside the tabulated slice ladder."""


class GeometryError(WarpFlowError, ValueError):
    """No admissible radial graph exists for the requested shape."""


class NonFiniteError(WarpFlowError, FloatingPointError):
    """NaN or Inf appeared in the evolving state."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record
