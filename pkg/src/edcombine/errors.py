"""Exception types shared across the package."""


class EdcombineError(Exception):
    """Base class for all package errors."""


class ConfigError(EdcombineError):
    """Invalid run configuration (CLI exit code 2)."""


class DataError(EdcombineError):
    """Invalid or unreadable input data (CLI exit code 3)."""


class PanelTooShort(DataError):
    pass


class UnknownDisease(DataError):
    pass


class TooFewRows(DataError):
    pass


class ZeroActual(EdcombineError):
    pass


class ZeroDenominator(EdcombineError):
    pass


class NonFiniteInput(EdcombineError):
    pass


class MissingForecasts(EdcombineError):
    pass


class NonStationarySpec(EdcombineError):
    pass
