"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands disagree on code length or vector dimensionality."""


class InvalidWeightError(ValueError):
    """A weight entry is negative, NaN, or infinite."""


class UnsupportedLengthError(ValueError):
    """Code length exceeds what the requested structure supports."""


class FormatError(ValueError):
    """A file does not conform to its declared binary layout.

    ``offset`` is the byte position at which the problem was detected,
    when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
