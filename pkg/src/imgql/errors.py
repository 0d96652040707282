"""Exception hierarchy.

Every failure raised by the package derives from :class:`ImgQLError`. The
command line front-end maps each family to its own exit status.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Pos:
    """A position in a source file (1-based line and column)."""

    file: str
    line: int
    col: int

    def __str__(self):
        return f"{self.file}:{self.line}:{self.col}"


class ImgQLError(Exception):
    """Base class of all errors raised by imgql."""


class SourceError(ImgQLError):
    """An error attributable to a position in a script."""

    def __init__(self, message, pos=None):
        self.message = message
        self.pos = pos
        super().__init__(f"{pos}: {message}" if pos is not None else message)


class LexError(SourceError):
    pass


class ParseError(SourceError):
    pass


class ImportFailure(SourceError):
    """An ``import`` could not be resolved or the imported file is not a library."""


class ElaborationError(SourceError):
    """Unbound names, wrong arities and similar name-resolution failures."""


class TypeCheckError(SourceError):
    pass


class EvaluationError(ImgQLError):
    """An operator failed while the task graph was running."""


class GeometryMismatchError(EvaluationError, ValueError):
    pass


class ImageIOError(ImgQLError, OSError):
    """Malformed, unsupported or unreadable image files and failed saves."""
