"""Exception types shared by all modules.

Each class maps to one CLI exit status (see ``modcorr.cli``).
"""


class ModcorrError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(ModcorrError, ValueError):
    exit_code = 2


class PreconditionError(ModcorrError, ValueError):
    """An argument violates the documented precondition of an operation."""

    exit_code = 3


class CostGuardError(ModcorrError, RuntimeError):
    """The requested computation is larger than the operation allows."""

    exit_code = 4


class PrecisionLossError(ModcorrError, ArithmeticError):
    """The certified error bound of a phase exceeds the allowed budget."""

    exit_code = 5
