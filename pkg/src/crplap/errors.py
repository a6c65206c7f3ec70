"""Exception hierarchy shared across the package."""


class CRPlapError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(CRPlapError, ValueError):
    pass


class MeshFormatError(CRPlapError, ValueError):
    """A mesh file is malformed or violates a mesh invariant."""


class StaleFunctionError(CRPlapError):
    """A finite element function is used with a mesh of another generation."""


class DegenerateElementError(CRPlapError, ArithmeticError):
    pass


class SolverFailure(CRPlapError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    ``residual`` holds the last achieved relative residual (or relative change
    for nonlinear iterations).
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NotSPDError(SolverFailure):
    """Conjugate gradients met a direction of non-positive curvature."""


class NonConvergenceError(SolverFailure):
    pass
