"""Exception hierarchy shared by all modules."""


class RqaError(Exception):
    """Base class for every error raised by vegrqa."""


class ParameterError(RqaError, ValueError):
    """A parameter lies outside the range its operation accepts."""


class DegenerateInputError(RqaError, ValueError):
    """Input data for which the requested quantity is undefined."""


class SizeError(RqaError, ValueError):
    """Series or trajectory too short for the requested operation."""


class DimensionError(RqaError, ValueError):
    """Mismatched lengths or matrix sizes."""


class SplitIndexError(RqaError, IndexError):
    """Split indices outside the series."""


class ConfigurationError(RqaError, ValueError):
    """Inconsistent pipeline configuration (e.g. unknown stack label)."""


class DataError(RqaError, ValueError):
    """Malformed input file.

    Carries enough location detail for a one-line diagnostic.
    """

    def __init__(self, message, path=None, row=None, column=None, pixel=None):
        self.path = path
        self.row = row
        self.column = column
        self.pixel = pixel
        super().__init__(message)

    def __str__(self):
        where = []
        if self.path is not None:
            where.append(f"file={self.path}")
        if self.row is not None:
            where.append(f"row={self.row}")
        if self.column is not None:
            where.append(f"column={self.column}")
        if self.pixel is not None:
            where.append(f"pixel={self.pixel}")
        msg = super().__str__()
        return f"{msg} ({', '.join(where)})" if where else msg


class FormatError(DataError):
    """File layout violates the expected CSV structure (ragged, bad header)."""


class ParseError(DataError):
    """A cell could not be parsed as a number."""
