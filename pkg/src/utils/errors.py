"""
Hiérarchie d'exceptions de swayopt.

Each exception carries the CLI exit code it maps to, so the front end never has to
guess how to report a failure.
"""


class SwayoptError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 4

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict:
        payload = {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
        }
        if self.context:
            payload["context"] = self.context
        return payload


class DomainError(SwayoptError, ValueError):
    """Invalid physical input (non-positive length, frequency, velocity, displacement...)."""

    exit_code = 3


class ContractViolation(SwayoptError, ValueError):
    """A precondition of an operation does not hold."""

    exit_code = 3


class SolverError(SwayoptError, RuntimeError):
    """A numerical solve did not produce an admissible answer."""

    exit_code = 4


class ZeroSearchError(SolverError):
    """Newton seeds found no zero in a window the argument principle says is populated."""


class InfeasibleDesignError(SolverError):
    """No feasible profile exists up to the requested switch cap."""

    exit_code = 2
