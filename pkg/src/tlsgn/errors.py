"""Exception types raised by the solver library."""


class TLSError(Exception):
    """Base class for all errors raised by tlsgn."""


class DimensionError(TLSError, ValueError):
    pass


class SingularMatrixError(TLSError, ArithmeticError):
    """A triangular factor has a (numerically) zero diagonal entry."""

    def __init__(self, index, value=0.0):
        self.index = index
        self.value = value
        super().__init__(f"singular triangular factor: |R[{index},{index}]| = {value:.3e}")


class RankDeficientError(TLSError, ArithmeticError):
    pass


class ConvergenceError(TLSError, ArithmeticError):
    """An iterative kernel did not converge."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class StepDegenerateError(TLSError, ArithmeticError):
    """The step length formula has a vanishing denominator."""

    def __init__(self, denominator):
        self.denominator = denominator
        super().__init__(f"degenerate step length: 1 - mu^2 x'h = {denominator:.3e}")


class HemisphereViolationError(TLSError, ValueError):
    """A point of the ellipsoid has no preimage x (last coordinate not negative)."""

    def __init__(self, last):
        self.last = last
        super().__init__(f"last component of C^+ f is {last:.3e}, must be negative")


class NotWellPosedError(TLSError):
    """The TLS problem has no unique solution."""

    def __init__(self, wellposedness):
        self.wellposedness = wellposedness
        super().__init__(f"problem is not well posed: {wellposedness.verdict}")


class TraceIncompatibleError(TLSError, ValueError):
    pass


class InsufficientDataError(TLSError, ValueError):
    pass


class ResampleLimitError(TLSError, RuntimeError):
    pass
