from typing import Optional


class NetAnomalyError(Exception):
    """Base class of all errors raised by netanomaly on bad input data or parameters."""


class ParseError(NetAnomalyError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f'line {line_number}: {message}'
        super().__init__(message)
        self.line_number = line_number


class ContractError(NetAnomalyError):
    """A precondition of an operation does not hold."""
    def __init__(self, precondition: str):
        super().__init__(f'precondition violated: {precondition}')
        self.precondition = precondition


class DegenerateDataError(NetAnomalyError):
    """The data admits no meaningful estimate (zero variance, empty histogram, ...)."""


class ConfigError(NetAnomalyError):
    pass
