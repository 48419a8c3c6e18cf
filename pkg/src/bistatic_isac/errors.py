"""Exception hierarchy shared by every stage of the pipeline."""


class IsacError(Exception):
    """Base class for all library errors."""


class InputError(IsacError):
    """Bad user input: malformed files, inconsistent configuration."""


class ProcessingError(IsacError):
    """A numerical stage could not produce a result for valid input."""


class ConfigError(InputError, ValueError):
    pass


class ShapeError(InputError, ValueError):
    pass


class DegenerateDirection(ProcessingError, ValueError):
    pass


class DelayAliased(ProcessingError, ValueError):
    pass


class IndeterminatePhase(ProcessingError):
    pass


class WindowIncomplete(ProcessingError):
    pass


class DegenerateGeometry(ProcessingError):
    pass


class NoPhysicalSolution(ProcessingError):
    pass


class NotACapture(InputError):
    pass


class Corrupt(InputError):
    def __init__(self, message, packet_index=None):
        super().__init__(message)
        self.packet_index = packet_index


class Unsupported(InputError):
    pass


class NoOverlap(InputError):
    pass
