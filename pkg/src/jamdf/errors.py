"""Exception hierarchy shared by every stage of the toolkit."""


class JamdfError(Exception):
    """Base class; the CLI maps any subclass to a nonzero exit code."""


class ConfigError(JamdfError, ValueError):
    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class DegenerateGeometryError(JamdfError, ValueError):
    pass


class AliasingError(JamdfError, ValueError):
    pass


class InsufficientDataError(JamdfError, ValueError):
    pass


class CoverageError(JamdfError, ValueError):
    pass


class BoundsError(JamdfError, IndexError):
    pass


class ShapeError(JamdfError, ValueError):
    pass


class NumericalError(JamdfError, ArithmeticError):
    pass


class FormatError(JamdfError):
    """Raised by readers of the binary container formats."""


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass
