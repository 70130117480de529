"""Exception hierarchy shared by all tdp modules."""


class TDPError(Exception):
    """Base class for every error raised by this package."""


class NotFound(TDPError, KeyError):
    pass


class ParseError(TDPError, ValueError):
    def __init__(self, message, line=None, field=None, position=None):
        self.line = line
        self.field = field
        self.position = position
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if position is not None:
            where.append(f"position {position}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ValidationError(TDPError, ValueError):
    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or field)


class InvalidGenotype(TDPError, ValueError):
    pass


class InvalidPressings(TDPError, ValueError):
    pass


class InvalidMove(TDPError, ValueError):
    pass


class InvalidParameter(TDPError, ValueError):
    pass


class BudgetError(TDPError):
    pass


class BudgetExhausted(TDPError):
    """Raised by an evaluator asked for more evaluations than it was granted."""


class SpecError(TDPError, ValueError):
    pass


class EmptyPool(TDPError, ValueError):
    pass


class EmptyInput(TDPError, ValueError):
    pass


class InvalidInput(TDPError, ValueError):
    pass
