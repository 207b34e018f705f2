"""Exception types raised by the pipeline."""


class ThermalTrackError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ThermalTrackError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RangeError(ThermalTrackError, ValueError):
    pass


class EmptyInputError(ThermalTrackError, ValueError):
    pass


class InputError(ThermalTrackError, ValueError):
    pass


class DegenerateDataError(ThermalTrackError, ValueError):
    pass


class FormatError(ThermalTrackError, ValueError):
    pass
