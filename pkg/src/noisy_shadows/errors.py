"""Exception hierarchy shared by all modules."""


class ShadowError(Exception):
    """Base class for library errors."""


class DimensionMismatchError(ShadowError, ValueError):
    pass


class ContractViolationError(ShadowError, ValueError):
    """An input does not satisfy a documented precondition."""


class ParameterError(ShadowError, ValueError):
    pass


class ChannelValidityError(ShadowError, ValueError):
    """A channel produced an invalid probability distribution."""


class UnsupportedError(ShadowError, NotImplementedError):
    pass


class NotInvertibleError(ShadowError, ArithmeticError):
    """The shadow channel cannot be inverted.

    :param beta: value of Tr(E o diag) for the offending channel, when known
    """

    def __init__(self, message: str, beta: float | None = None):
        self.beta = beta
        if beta is not None:
            message = f"{message} (beta = {beta:.12g})"
        super().__init__(message)


class ConfigError(ShadowError, ValueError):
    pass
