"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes (input 2, config 3, resource 4),
so new error types should subclass the right branch.
"""


class CropError(Exception):
    """Base class for all errors raised by this package."""


class InputError(CropError):
    """Bad input data: unreadable files, malformed records, bad dimensions."""


class ParseError(InputError):
    """A malformed line in an input file."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class DimensionError(InputError):
    """Inconsistent shapes between inputs that must agree."""


class ConfigError(CropError):
    """Invalid or infeasible configuration parameters."""


class ResourceCapError(CropError):
    """A desk-scale guard was exceeded (oracle work caps and the like)."""
