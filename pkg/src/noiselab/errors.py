"""Shared exception types.

Exit-code mapping in the CLI: ValidationError -> 1, NumericError -> 2.
"""


class ValidationError(ValueError):
    """Invalid user input: bad graph/function data, out-of-range parameters."""


class SizeCapError(ValidationError):
    """A builder refused to enumerate a state space above its size cap."""


class NumericError(RuntimeError):
    """A numerical guarantee failed (solver residual, non-finite output)."""
