"""Exception hierarchy shared by all pipeline stages."""


class TexDefectError(Exception):
    """Base class for every error raised by this package."""


class ImageIOError(TexDefectError, OSError):
    """An image or mask could not be read or decoded."""


class PreconditionError(TexDefectError, ValueError):
    """Inputs violate a documented precondition (sizes, ranges, shapes)."""
