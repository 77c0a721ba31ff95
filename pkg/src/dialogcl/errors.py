"""Exception types shared across the package.

Each class maps to one CLI exit code, see :mod:`dialogcl.cli`.
"""


class DialogclError(Exception):
    """Base class for all package errors."""


class InputFormatError(DialogclError):
    """A file or record could not be parsed. Message carries the line number."""


class DegenerateDataError(DialogclError):
    """Input is valid but too small or too uniform for the requested operation."""


class ProtocolError(DialogclError):
    """A failure while talking to an external learner process."""

    def __init__(self, message: str, seq: int | None = None):
        super().__init__(message)
        self.seq = seq


class LearnerExitError(ProtocolError):
    """The learner process terminated while a request was pending."""


class LearnerTimeoutError(ProtocolError):
    """No reply arrived within the configured timeout."""


class MalformedReplyError(ProtocolError):
    """The learner replied with something that is not a valid protocol message."""
