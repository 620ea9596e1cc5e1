"""Exception types shared across the package.

The CLI maps these onto its exit codes: FormatError -> 1 (I/O),
ValueError subclasses -> 2 (validation), NumericalError -> 3.
"""


class FormatError(ValueError):
    """A file could not be parsed. ``offset`` is the byte (or line) position."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class DegenerateInputError(ValueError):
    """Input is well-formed but geometrically or statistically degenerate."""


class NumericalError(ArithmeticError):
    """A numerical procedure could not produce a trustworthy result."""
