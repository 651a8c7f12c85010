"""Exception hierarchy shared by all model modules."""


class QSwitchError(Exception):
    """Base class for every error raised by this package."""


class ParameterDomainError(QSwitchError, ValueError):
    """A parameter lies outside the domain where the model is defined."""

    def __init__(self, name: str, value: object, reason: str) -> None:
        self.name = name
        self.value = value
        self.reason = reason
        super().__init__(f"{name}={value!r}: {reason}")


class UndefinedConditionalError(QSwitchError, ArithmeticError):
    """Conditioning on link success is impossible (success probability is zero)."""


class ProblemSizeError(QSwitchError, ValueError):
    """An exhaustive routine was asked to handle an instance above its tractability bound."""


class UsageError(QSwitchError, ValueError):
    """Incompatible combination of arguments."""


class NoFeasibleBlockSizeError(QSwitchError):
    """Every block size in the scanned range gives an undefined objective."""


class DegenerateSeriesError(QSwitchError, ValueError):
    """A series cannot be min-max normalized."""


class ConfigError(QSwitchError, ValueError):
    """Invalid run configuration.

    ``field`` names the offending key when one can be identified; ``line`` and
    ``column`` are set for syntax errors.
    """

    def __init__(
        self,
        message: str,
        *,
        field: str | None = None,
        line: int | None = None,
        column: int | None = None,
    ) -> None:
        self.field = field
        self.line = line
        self.column = column
        super().__init__(message)
