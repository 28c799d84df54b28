"""Exception hierarchy shared across the package.

The three categories mirror the CLI exit codes: configuration problems (bad
config files, inconsistent run options), domain problems (inputs outside an
operation's mathematical domain), and internal inconsistencies that should
be impossible under validated inputs.
"""


class BucksimError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(BucksimError):
    """Invalid or inconsistent run configuration."""


class DomainError(BucksimError, ValueError):
    """Input outside the mathematical domain of an operation."""


class InvalidParamsError(DomainError):
    """Converter parameters violate the stability assumptions."""


class InternalError(BucksimError, RuntimeError):
    """State that should be unreachable under validated inputs."""
