"""Train a network to retrieve a device parameter from transfer curves."""

import argparse
import dataclasses
import logging
import sys
from typing import Optional

from level3inv import argparsing
from level3inv import datasetio
from level3inv import errors
from level3inv import log
from level3inv import runconfig
from level3inv import trainer
from level3inv.datasetdef import SPLITS
from level3inv.neuralnet import ACTIVATIONS


def train(rc: runconfig.RunConfig, timing: bool = True) -> dict[str, str]:
    """Train on the configured dataset, then write the model and report.

    Returns:
        summary values to print
    """
    samples, manifest = datasetio.read_dataset(rc.dataset_path)
    mlp = rc.mlp_config(manifest.grid.count)
    model, report = trainer.train_samples(samples, manifest, mlp, rc.train_seed,
                                          rc.select_best_val)
    trainer.save_checkpoint(model, rc.model_path, manifest, report, rc.to_dict())
    trainer.write_report(report, rc.report_path, timing)

    summary = {
        'epochs': str(mlp.epochs),
        'selected_epoch': str(report.selected_epoch),
        'model': rc.model_path,
        'report': rc.report_path,
    }
    # Report the split the network is finally judged on, falling back when it's empty
    for split in reversed(SPLITS):
        if row := report.final(split):
            summary['split'] = split
            summary.update((k, repr(v)) for k, v in dataclasses.asdict(row.metrics).items())
            break
    return summary


def parse_args(args=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description='Train a network to retrieve a device parameter from transfer curves')
    argparsing.arguments_logging(parser)
    argparsing.arguments_config(parser)
    parser.add_argument(
        '--data',
        dest='dataset_path',
        help='Dataset directory')
    parser.add_argument(
        '--out',
        dest='model_path',
        help='Model checkpoint file to write')
    parser.add_argument(
        '--report',
        dest='report_path',
        help='Per-epoch report file to write')
    parser.add_argument(
        '--seed',
        dest='train_seed',
        type=argparsing.nonnegative_int,
        help='Seed of weight initialization and batch shuffling')
    parser.add_argument(
        '--epochs',
        type=argparsing.nonnegative_int,
        help='Number of passes over the training split')
    parser.add_argument(
        '--batch-size',
        type=argparsing.positive_int,
        help='Number of curves per weight update')
    parser.add_argument(
        '--lr',
        dest='learning_rate',
        type=argparsing.positive_float,
        help='Adam learning rate')
    parser.add_argument(
        '--hidden',
        dest='hidden_layers',
        type=argparsing.comma_list(argparsing.positive_int),
        help='Comma-separated widths of the hidden layers')
    parser.add_argument(
        '--activation',
        dest='hidden_activation',
        choices=ACTIVATIONS,
        help='Activation function of the hidden layers')
    parser.add_argument(
        '--sigmoid-k',
        type=argparsing.positive_float,
        help='Spread constant of the sigmoid activation')
    parser.add_argument(
        '--select-best-val',
        action='store_const',
        const=True,
        help='Keep the weights of the epoch with the lowest validation MSE')
    parser.add_argument(
        '--no-timing',
        action='store_true',
        help='Write 0 as the epoch duration so identical runs give identical reports')
    return parser.parse_args(args=args)


def main(argv: Optional[list[str]] = None) -> int:
    argparsing.load_config(argv)
    args = parse_args(argv)
    log.setup(args)

    try:
        rc = runconfig.RunConfig.from_config().override(**vars(args))
        log.log_settings(rc.to_dict())
        with log.timed('Training'):
            summary = train(rc, timing=not args.no_timing)
    except errors.Level3InvError as e:
        logging.error(e)
        return e.exit_code

    for key, value in summary.items():
        print(f'{key}={value}')
    return 0


if __name__ == '__main__':
    sys.exit(main())
