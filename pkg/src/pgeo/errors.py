"""Exception hierarchy shared by every engine."""


class PgeoError(Exception):
    """Base class for all errors raised by pgeo."""


class ExpressionError(PgeoError):
    pass


class ParseError(ExpressionError):
    def __init__(self, message, text="", position=None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class UnknownFunctionError(ParseError):
    pass


class UnboundSymbolError(ExpressionError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unbound symbol {name!r}")


class DomainError(ExpressionError):
    """Raised when evaluation hits a singular node (log of non-positive, 1/0, ...)."""

    def __init__(self, message, node=None):
        self.node = node
        if node is not None:
            message = f"{message}: {node}"
        super().__init__(message)


class SimplificationBudgetExceeded(ExpressionError):
    pass


class ValidationError(PgeoError):
    """A model violates one of its structural invariants."""


class MetricShapeError(ValidationError):
    pass


class JacobiError(ValidationError):
    def __init__(self, triple, residual):
        self.triple = triple
        self.residual = residual
        super().__init__(f"Jacobi identity fails for {triple}: {residual}")


class NonReductiveError(ValidationError):
    pass


class UnsupportedSpectrumError(PgeoError):
    pass


class TransportError(PgeoError):
    pass


class ModelFileError(PgeoError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)
