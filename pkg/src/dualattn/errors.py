"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Raised when operand shapes are inconsistent or degenerate."""


class ConfigError(ValueError):
    """Raised for invalid windowing, tiling, mode, or precision settings."""


class UsageError(ValueError):
    """Raised for malformed harness or CLI requests (bad mode list, empty sweep)."""


class CheckFailure(RuntimeError):
    """Raised when a correctness pre-check or verification sweep fails."""
