"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific class that applies.
"""


class DoslabError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(DoslabError):
    """Malformed or inconsistent configuration input."""

    exit_code = 2


class NumericalError(DoslabError):
    """A computation failed to reach its requested accuracy or diverged."""

    exit_code = 3


class PreconditionError(DoslabError):
    """An operation was called on inputs it explicitly rejects."""

    exit_code = 4
