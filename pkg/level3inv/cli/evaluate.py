"""Score a trained network on one split of a dataset."""

import argparse
import dataclasses
import logging
import sys
from typing import Optional

from level3inv import argparsing
from level3inv import errors
from level3inv import log
from level3inv import runconfig
from level3inv import trainer


def parse_args(args=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description='Score a trained network on one split of a dataset')
    argparsing.arguments_logging(parser)
    argparsing.arguments_config(parser)
    parser.add_argument(
        '--data',
        dest='dataset_path',
        help='Dataset directory')
    parser.add_argument(
        '--model',
        dest='model_path',
        help='Model checkpoint file')
    parser.add_argument(
        '--split',
        default='test',
        help='Split to score: train, val or test')
    return parser.parse_args(args=args)


def main(argv: Optional[list[str]] = None) -> int:
    argparsing.load_config(argv)
    args = parse_args(argv)
    log.setup(args)

    try:
        rc = runconfig.RunConfig.from_config().override(**vars(args))
        log.log_settings(rc.to_dict())
        model, _ = trainer.load_checkpoint(rc.model_path)
        with log.timed(f'Scoring the {args.split} split'):
            metrics = trainer.evaluate(model, rc.dataset_path, args.split)
    except errors.Level3InvError as e:
        logging.error(e)
        return e.exit_code

    print(f'split={args.split}')
    for key, value in dataclasses.asdict(metrics).items():
        print(f'{key}={value!r}')
    return 0


if __name__ == '__main__':
    sys.exit(main())
