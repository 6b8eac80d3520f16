"""Exception hierarchy shared by every obslab module."""


class ObslabError(Exception):
    """Base class for all errors raised by obslab."""


class InvalidArgumentError(ObslabError, ValueError):
    pass


class SingularSystemError(ObslabError, ArithmeticError):
    pass


class DegenerateInputError(ObslabError, ValueError):
    """A basis function normalizer underflowed for the reported input."""


class IntegrationDivergedError(ObslabError, ArithmeticError):
    """A state became non-finite; ``time`` records where it happened."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class BudgetExceededError(ObslabError):
    pass


class ConfigError(ObslabError):
    """Scenario file problem; ``line``/``column`` point into the source when known."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column
