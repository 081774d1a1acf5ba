"""Exception hierarchy shared by every module."""


class HilbertGeomError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(HilbertGeomError, ValueError):
    """Malformed body description or argument."""


class PreconditionError(InvalidInputError):
    """An argument violates an operation's precondition (e.g. a non-interior point)."""


class NonSmoothBoundaryError(InvalidInputError):
    """The boundary is not differentiable at the requested point."""


class NotStrictlyConvexError(InvalidInputError):
    """The body failed the strict-convexity guard."""


class NumericalFailure(HilbertGeomError, ArithmeticError):
    """An iterative solver did not converge or produced a non-finite value."""
