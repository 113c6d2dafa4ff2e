"""Exception hierarchy shared by all modules."""


class EstErrError(Exception):
    """Base class for all errors raised by :mod:`esterr`."""


class InvalidSpec(EstErrError, ValueError):
    """A process specification violates one of its invariants."""


class DimensionMismatch(EstErrError, ValueError):
    """Array arguments have incompatible shapes."""


class InvalidProgram(EstErrError, ValueError):
    """A quadratic program violates one of its invariants."""


class SingularSystem(EstErrError, ArithmeticError):
    """The KKT system (or covariance matrix) is numerically singular.

    This is the expected outcome of an unconstrained solve whenever the
    empirical covariance matrix has zero modes, i.e. ``T < N``.
    """


class Infeasible(EstErrError, ValueError):
    """No ``w >= 0`` satisfies the equality constraints."""


class MaxIterations(EstErrError, RuntimeError):
    """The active-set loop exceeded its iteration cap."""


class TooLarge(EstErrError, ValueError):
    """The brute-force oracle was asked to enumerate too many active sets."""


class DegenerateDenominator(EstErrError, ArithmeticError):
    """The reference cost in a q0 ratio is not strictly positive."""


class BudgetViolation(EstErrError, ValueError):
    """Weights do not sum to one within tolerance."""


class CriticalOrSupercritical(EstErrError, ValueError):
    """The analytic mean of q0 is undefined for ``N >= T``."""


class InsufficientPoints(EstErrError, ValueError):
    """Too few (or invalid) points for an exponent fit."""


class ConfigError(EstErrError, ValueError):
    """A run configuration file is malformed or fails schema validation."""
