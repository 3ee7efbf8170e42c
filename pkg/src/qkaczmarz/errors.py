"""Exception hierarchy shared across the package."""


class QkzError(Exception):
    """Base class for all package errors."""


class ZeroRow(QkzError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"row {index} has (near-)zero norm and cannot be normalized")


class DimensionMismatch(QkzError):
    pass


class IndexOutOfRange(QkzError):
    pass


class EmptySelection(QkzError):
    pass


class ParseError(QkzError):
    def __init__(self, line, message="malformed Matrix Market data"):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnsupportedField(QkzError):
    pass


class InvalidDualPair(QkzError):
    pass


class DegenerateDirection(QkzError):
    pass


class NoRoot(QkzError):
    pass


class EmptyInput(QkzError):
    pass


class EmptyAcceptableSet(QkzError):
    pass


class SpecInvalid(QkzError):
    pass


class ConfigInvalid(QkzError):
    pass


class ParameterOrderViolation(QkzError):
    pass


class MissingGroundTruth(QkzError):
    pass


class ZeroGroundTruth(QkzError):
    pass


class BudgetExceeded(QkzError):
    pass


class DegenerateSelection(QkzError):
    pass
