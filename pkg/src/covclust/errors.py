"""Exception types shared across the package."""


class CovclustError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(CovclustError, ValueError):
    """Array shapes disagree with the declared problem dimensions."""


class DomainError(CovclustError, ValueError):
    """Values outside the mathematical domain (non-finite, wrong range)."""


class InputError(CovclustError, ValueError):
    """Malformed user-facing input: files, label ranges, flags, ids."""


class SolverError(CovclustError, RuntimeError):
    """The ADMM loop or an inner optimizer failed.

    ``diagnostics`` holds the last usable iteration record (iteration
    counter, residual norms, objective value) so callers can report where
    the run broke down.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class FitError(CovclustError, RuntimeError):
    """A penalized maximum-a-posteriori fit failed to reach tolerance."""


class NumericError(CovclustError, ArithmeticError):
    """A numerically impossible quantity appeared (non-negative Hessian
    diagonal, non positive-definite covariance), signalling a bug or a
    broken upstream input rather than a user mistake."""
