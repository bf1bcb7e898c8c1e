"""Exception types raised by the engine."""


class EBRError(Exception):
    """Base class for all engine errors."""


class CodeRangeError(EBRError, ValueError):
    """A parse-matrix entry lies outside its mapping-rule range."""

    def __init__(self, row, column, value, allowed):
        self.row = row
        self.column = column
        self.value = value
        self.allowed = allowed
        super().__init__(
            f"code {value} out of range {allowed[0]}..{allowed[1]} "
            f"at row {row}, column {column}"
        )


class DatasetError(EBRError, ValueError):
    """Invalid training data."""


class CsvParseError(DatasetError):
    def __init__(self, path, row, column, cell):
        self.path = path
        self.row = row
        self.column = column
        self.cell = cell
        super().__init__(
            f"{path}: non-numeric cell {cell!r} at row {row}, column {column!r}"
        )


class MissingColumnError(DatasetError):
    pass


class ZeroVarianceError(DatasetError):
    pass


class DegenerateFitError(EBRError, ArithmeticError):
    """The least-squares system has no usable column."""
