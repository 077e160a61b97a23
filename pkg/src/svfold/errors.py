"""Exception hierarchy.

``DomainError`` is raised for inputs outside the supported problem class
(the CLI maps it to exit status 1); ``InvariantError`` signals that a
guarantee the algorithm relies on did not hold numerically (exit status 2).
"""


class SvfoldError(Exception):
    """Base class for all package errors."""


class DomainError(SvfoldError, ValueError):
    """Input is valid data but outside the supported problem domain."""


class DocumentError(DomainError):
    """A chain or trajectory document failed schema validation."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SamplingError(SvfoldError, RuntimeError):
    """Random instance generation gave up after its retry budget."""


class InvariantError(SvfoldError, RuntimeError):
    """An internal guarantee was violated; carries the offending instance."""

    def __init__(self, message: str, instance=None):
        self.instance = instance
        super().__init__(message)


class CertificationError(InvariantError):
    """A separating belt could not be certified."""


class StepUnderflowError(InvariantError):
    """The integrator needed a step below its minimum size."""
