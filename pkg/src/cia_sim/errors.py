"""Exception hierarchy shared by all modules.

The CLI maps each class to an exit code, so raise the most specific one.
"""


class CiaError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ConfigError(CiaError, ValueError):
    """Malformed or out-of-range configuration."""

    exit_code = 2


class InfeasibleError(CiaError):
    """Instance cannot be realised: Q < 1 at the requested power, or a size cap is exceeded."""

    exit_code = 3


class SizeCapError(InfeasibleError):
    pass


class DiagnosticError(CiaError):
    """An invariant or numeric diagnostic failed (e.g. coefficient collision)."""

    exit_code = 4


class CoefficientCollisionError(DiagnosticError):
    pass


class InsufficientDataError(CiaError):
    """Too few reliable sweep points to fit a slope."""

    exit_code = 4


class UnresolvedSymbolError(CiaError, KeyError):
    """A monomial references a symbol with no numeric value supplied."""

    exit_code = 2
