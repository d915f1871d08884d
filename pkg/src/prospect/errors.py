"""Exception types shared across the package."""


class ProspectError(Exception):
    """Base class for errors raised by :mod:`prospect`."""


class DomainError(ProspectError, ArithmeticError):
    """A numerical routine was called outside the region where it has a solution."""


class ConvergenceError(ProspectError, RuntimeError):
    """An iterative routine failed to reach its tolerance."""


class NotSPDError(ProspectError, ValueError):
    """A matrix expected to be symmetric positive definite is not."""
