"""Exception types shared across the package.

Every guard in the library raises one of these, so callers (and the CLI,
which maps them onto exit codes) can tell configuration mistakes apart
from size limits and from refusals that carry a diagnostic meaning.
"""


class UcovError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(UcovError):
    """Operands live in different spaces or have incompatible shapes."""


class UnsupportedOperationError(UcovError):
    """Operation is not defined for the given space or configuration."""


class EmptyInputError(UcovError):
    """An aggregate was requested over zero elements."""


class InvalidConfigError(UcovError):
    """A descriptor, plan, or config file fails validation."""


class SizeLimitError(UcovError):
    """An exact algorithm was requested beyond its tractable size."""


class IndeterminateDiagnosticError(UcovError):
    """A Monte Carlo diagnostic landed inside its inconclusive band."""


class GuardRefusalError(UcovError):
    """An experiment refused to run because its premise fails for the plan."""
