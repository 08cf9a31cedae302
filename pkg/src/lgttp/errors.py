"""Exception taxonomy shared by the library and the command line tool.

Every error carries a short machine-readable ``code`` and the process exit
code the CLI maps it to: 2 for invalid input or flags, 3 for I/O failures,
1 for anything internal.
"""

from __future__ import annotations


class LGTTPError(Exception):
    """Base class for all library errors."""

    code: str = "internal"
    exit_code: int = 1


class InvalidInputError(LGTTPError, ValueError):
    """Caller-supplied values violate a documented precondition."""

    code = "invalid-input"
    exit_code = 2

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class FormatError(InvalidInputError):
    """A file's bytes do not parse as the documented layout.

    ``code`` is one of: bad-magic, bad-version, truncated, non-finite,
    trailing-data.
    """


class FileIOError(LGTTPError, OSError):
    """The operating system refused a read or write."""

    code = "io-error"
    exit_code = 3

    def __init__(self, message: str):
        super().__init__(message)


class NotTrainedError(LGTTPError, RuntimeError):
    """A trained-parameter operation ran before any parameters were fit."""

    code = "not-trained"
    exit_code = 2
