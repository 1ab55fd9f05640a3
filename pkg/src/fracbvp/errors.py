"""Exception hierarchy shared by every module."""


class FracBVPError(Exception):
    """Base class for all package errors."""


class DomainError(FracBVPError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ParameterError(FracBVPError, ValueError):
    """A parameter violates the documented contract (orders, node counts, ...)."""


class UnsupportedRepresentationError(FracBVPError):
    """The requested operation leaves the closed-form term algebra."""


class SolverError(FracBVPError):
    """A linear solve failed or was too ill-conditioned to trust."""

    def __init__(self, message, condition_estimate=float("nan")):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class WellposednessViolationError(SolverError):
    """The bordered characterization system is singular."""


class SearchFailureError(FracBVPError):
    """The counterexample construction did not terminate as expected."""


class OracleError(FracBVPError):
    """The reference quadrature did not converge."""


class ConfigError(FracBVPError, ValueError):
    """A configuration file could not be parsed into a problem instance."""
