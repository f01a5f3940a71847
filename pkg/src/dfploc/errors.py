"""Exception types raised across the package."""


class DfpError(Exception):
    """Base class for all dfploc errors."""


class EmptyTraces(DfpError, ValueError):
    pass


class MissingStream(DfpError, ValueError):
    def __init__(self, location, stream):
        self.location = location
        self.stream = stream
        super().__init__(f"location {location!r} has no samples for stream {stream}")


class OutOfRangeSample(DfpError, ValueError):
    pass


class OutOfRangeValue(DfpError, ValueError):
    pass


class UnknownLocation(DfpError, KeyError):
    pass


class UnknownStream(DfpError, KeyError):
    pass


class EmptyRadioMap(DfpError, ValueError):
    pass


class InsufficientSamples(DfpError, ValueError):
    pass


class InvalidK(DfpError, ValueError):
    pass


class EmptyHistory(DfpError, ValueError):
    pass


class InvalidGrid(DfpError, ValueError):
    pass


class EmptyErrors(DfpError, ValueError):
    pass


class InvalidParams(DfpError, ValueError):
    pass


class FormatError(DfpError, ValueError):
    """Malformed or unsupported-version file."""
