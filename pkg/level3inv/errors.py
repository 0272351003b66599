"""Exceptions shared across the package.

Every exception carries the process exit code the command-line programs use when it aborts a
command.
"""


class Level3InvError(Exception):
    """Base class of all errors raised by this package."""

    exit_code = 1


class IoError(Level3InvError):
    """A dataset, model or report file could not be read or written."""

    exit_code = 4


class SchemaMismatch(IoError):
    """A stored file has an unsupported schema_version."""


class CorruptData(IoError):
    """A stored file is malformed or inconsistent with its manifest."""
