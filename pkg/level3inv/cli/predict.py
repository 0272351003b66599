"""Retrieve a device parameter from one measured transfer curve."""

import argparse
import logging
import re
import sys
from typing import Optional

from level3inv import argparsing
from level3inv import errors
from level3inv import log
from level3inv import runconfig
from level3inv import trainer
from level3inv.devicedef import PARAM_UNITS


def read_curve(path: str) -> list[float]:
    """Read drain currents separated by commas or whitespace.

    Raises:
        IoError: the file could not be read
        CorruptData: a value is not a number
    """
    try:
        with open(path, encoding='UTF-8') as f:
            text = f.read()
    except OSError as e:
        raise errors.IoError(f'Cannot read curve {path}: {e}') from e
    except UnicodeDecodeError as e:
        raise errors.CorruptData(f'Curve {path} is not UTF-8 text: {e}') from e
    try:
        return [float(v) for v in re.split(r'[,\s]+', text) if v]
    except ValueError as e:
        raise errors.CorruptData(f'Bad current in {path}: {e}') from e


def parse_args(args=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description='Retrieve a device parameter from one transfer curve')
    argparsing.arguments_logging(parser)
    argparsing.arguments_config(parser)
    parser.add_argument(
        '--model',
        dest='model_path',
        help='Model checkpoint file')
    parser.add_argument(
        '--curve',
        required=True,
        help='File holding the drain currents of one curve on the dataset grid, in amperes')
    return parser.parse_args(args=args)


def main(argv: Optional[list[str]] = None) -> int:
    argparsing.load_config(argv)
    args = parse_args(argv)
    log.setup(args)

    try:
        rc = runconfig.RunConfig.from_config().override(**vars(args))
        model, manifest = trainer.load_checkpoint(rc.model_path)
        value = trainer.predict(model, read_curve(args.curve), manifest)
    except errors.Level3InvError as e:
        logging.error(e)
        return e.exit_code

    name = manifest.target.name
    print(f'{name}={value!r}')
    print(f'unit={PARAM_UNITS[name]}')
    return 0


if __name__ == '__main__':
    sys.exit(main())
