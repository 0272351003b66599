"""Functions to set up common argument parsers."""

import argparse
import os
from typing import Callable, Optional

from level3inv import config
from level3inv import runconfig


class ExpandUserFileName:
    """argparsing type that checks if a file has the desired permisssions.

    User directories with tildes (e.g. ~user/foo) are expanded first.
    The file name is returned rather than an open file (unlike argparse.FileType).
    """

    def __init__(self, mode: str = 'r'):
        self.mode = mode

    def __call__(self, filename: str):
        fn = os.path.expanduser(filename)
        modebits = ((os.R_OK if 'r' in self.mode or '+' in self.mode else 0)
                    | (os.W_OK if 'w' in self.mode or 'a' in self.mode or '+' in self.mode
                       else 0))
        if not os.access(fn, modebits):
            raise argparse.ArgumentTypeError(f'{fn} does not exist or have permission')
        return fn


class StoreMultipleConstAction(argparse.Action):
    """Store the value of the const to multiple attributes.

    const holds the value to store (defaults to True) and attrs is an iterable
    of attribute names to store the value, in addition to dest.
    """

    def __init__(self,
                 option_strings,
                 dest: str,
                 const: bool = True,
                 attrs: Optional[list[str]] = None,
                 default=None,
                 required: bool = False,
                 help=None,     # noqa: A002
                 metavar=None):
        super().__init__(
            option_strings=option_strings,
            dest=dest,
            nargs=0,
            const=const,
            default=default,
            required=required,
            help=help)
        self.attrs = attrs if attrs else []

    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, self.const)
        for attr in self.attrs:
            setattr(namespace, attr, self.const)


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f'{text} is not a positive integer')
    return value


def nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f'{text} is negative')
    return value


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f'{text} is not a positive number')
    return value


def nonnegative_float(text: str) -> float:
    value = float(text)
    if not 0 <= value < float('inf'):
        raise argparse.ArgumentTypeError(f'{text} is not a nonnegative number')
    return value


def comma_list(item_type: Callable) -> Callable[[str], tuple]:
    """argparsing type converting a comma-separated list."""
    def convert(text: str) -> tuple:
        try:
            items = tuple(item_type(item) for item in text.split(',') if item.strip())
        except ValueError as e:
            raise argparse.ArgumentTypeError(f'Bad list {text!r}: {e}') from e
        if not items:
            raise argparse.ArgumentTypeError('Empty list')
        return items
    return convert


def range_override(text: str) -> tuple[str, str]:
    """argparsing type for NAME=MIN:MAX[:LAW] or NAME=fixed.

    Returns the parameter name and its range text, as stored in the parameter_ranges setting.
    """
    try:
        prange = runconfig.parse_range_override(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e
    return prange.name, text.partition('=')[2].strip()


def arguments_logging(parser: argparse.ArgumentParser):
    """Add arguments needed for logging."""
    parser.add_argument(
        '-v', '--verbose',
        action='store_true',
        help='Show more log messages')
    parser.add_argument(
        '--debug',
        action=StoreMultipleConstAction,
        attrs=['verbose'],
        help='Show debug level log messages')
    parser.add_argument(
        '--level-prefix',
        action='store_true',
        help='Include syslog priority level in log message as <N> prefix')


def arguments_config(parser: argparse.ArgumentParser):
    """Add the argument selecting the configuration file."""
    parser.add_argument(
        '--config',
        type=ExpandUserFileName('r'),
        help=f'Configuration file to use instead of {config.CONFIG_FILE} in the config '
             'directory')


def load_config(args: Optional[list[str]] = None):
    """Load the configuration file named with --config, if any.

    This must be done before any setting is read from the configuration.
    A bad file name is left for the full parser to report.
    """
    preparser = argparse.ArgumentParser(add_help=False)
    preparser.add_argument('--config')
    known, _ = preparser.parse_known_args(args)
    configfn = os.path.expanduser(known.config) if known.config else None
    if configfn and not os.access(configfn, os.R_OK):
        configfn = None
    config.load(configfn)
