"""Exception hierarchy shared by every subcount module."""


class SubcountError(Exception):
    """Base class for all library errors."""


class SizeLimitExceeded(SubcountError):
    pass


class EmptySelection(SubcountError):
    pass


class ParseError(SubcountError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class ValidationError(SubcountError):
    pass


class IndexOutOfRange(SubcountError):
    pass


class PatternTooLarge(SubcountError):
    pass


class NotAStar(SubcountError):
    pass


class CountingInternalError(SubcountError):
    """Raised when an exact count fails an internal consistency check."""


class BudgetExceeded(SubcountError):
    def __init__(self, n, k, budget):
        self.n, self.k, self.budget = n, k, budget
        super().__init__(f"n^k = {n}^{k} = {n ** k} exceeds tuple budget {budget}")


class PatternTooSmall(SubcountError):
    pass


class PatternDisconnected(SubcountError):
    pass


class DimensionMismatch(SubcountError):
    pass


class DepthUnsupported(SubcountError):
    pass


class EmptySplit(SubcountError):
    pass


class TooFewGraphs(SubcountError):
    pass


class GenerationFailure(SubcountError):
    pass


class DuplicateId(SubcountError):
    pass
