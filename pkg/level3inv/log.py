"""Logging setup for the command-line programs."""

import argparse
import contextlib
import logging
import os
import shlex
import sys
import time
from typing import Iterator, Mapping, Optional

# Upper logging level and the syslog priority it maps to; nothing maps to KERN_NOTICE
SYSLOG_PRIORITIES = (
    (logging.DEBUG, 7),    # KERN_DEBUG
    (logging.INFO, 6),     # KERN_INFO
    (logging.WARNING, 4),  # KERN_WARNING
    (logging.ERROR, 3),    # KERN_ERR
)
SYSLOG_CRITICAL = 2


def calling_program() -> str:
    """Return the name of the program that started us."""
    return os.path.basename(sys.argv[0])


def logging_level_to_syslog(level: int) -> int:
    """Convert a logging level into a syslog-compatible one."""
    for upper, priority in SYSLOG_PRIORITIES:
        if level <= upper:
            return priority
    return SYSLOG_CRITICAL


class SyslogFormatter(logging.Formatter):
    """Formats log messages with a syslog-style <N> level prefix."""

    def __init__(self, fmt: str):
        super().__init__()
        self.base_format = fmt

    def format(self, record: logging.LogRecord) -> str:  # noqa: A003
        self._style._fmt = f'<{logging_level_to_syslog(record.levelno)}>' + self.base_format
        return super().format(record)


def setup(args: argparse.Namespace, program: Optional[str] = None):
    """Set up the logging subsystem from the common logging arguments.

    program defaults to the program invoking this run. Any earlier setup is replaced, so the
    programs may be run more than once in one process.
    """
    program = (program or shlex.quote(calling_program())).replace('%', '%%')
    if args.debug:
        level, fmt = logging.DEBUG, program + ' %(levelno)s %(filename)s: %(message)s'
    elif args.verbose:
        level, fmt = logging.INFO, program + ' %(asctime)s %(filename)s: %(message)s'
    else:
        level, fmt = logging.WARNING, '%(filename)s: %(message)s'
    logging.basicConfig(level=level, format=fmt, force=True)
    if args.level_prefix:
        for handler in logging.getLogger().handlers:
            handler.setFormatter(SyslogFormatter(fmt))


def log_settings(settings: Mapping[str, object]):
    """Log every resolved setting of a run at debug level."""
    for name in sorted(settings):
        logging.debug(f'Setting {name}={settings[name]!r}')


@contextlib.contextmanager
def timed(what: str) -> Iterator[None]:
    """Log how long the body of a with statement took."""
    start = time.perf_counter()
    yield
    logging.info(f'{what} took {time.perf_counter() - start:.3f} s')
