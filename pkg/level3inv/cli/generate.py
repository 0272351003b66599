"""Generate a dataset of simulated power MOSFET transfer curves."""

import argparse
import logging
import sys
from typing import Optional

from level3inv import argparsing
from level3inv import dataset
from level3inv import datasetio
from level3inv import errors
from level3inv import log
from level3inv import runconfig
from level3inv.datasetdef import GRANULARITY_CURVE, GRANULARITY_DEVICE
from level3inv.devicedef import TARGET_NAMES
from level3inv.neuralnet import InvalidConfig


def generate(rc: runconfig.RunConfig) -> dict[str, str]:
    """Simulate and store the dataset described by the settings.

    Returns:
        summary values to print
    """
    try:
        samples, manifest = dataset.build_dataset(
            n_devices=rc.n_devices, ranges=rc.ranges(), grid=rc.grid(), v_gs_list=rc.v_gs_list,
            master_seed=rc.dataset_seed, fractions=rc.split_fractions, target=rc.target_param,
            noise_rel=rc.noise_rel, split_granularity=rc.split_granularity,
            jobs=rc.generate_jobs, run_config=rc.to_dict())
    except ValueError as e:
        raise InvalidConfig(str(e)) from e
    datasetio.write_dataset(samples, manifest, rc.dataset_path, rc.compress_dataset)
    return {
        'samples': str(len(samples)),
        'devices': str(manifest.n_devices),
        'retries': str(manifest.retry_count),
        'dataset': rc.dataset_path,
    }


def parse_args(args=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description='Generate a dataset of simulated Level-3 power MOSFET transfer curves')
    argparsing.arguments_logging(parser)
    argparsing.arguments_config(parser)
    parser.add_argument(
        '--devices',
        dest='n_devices',
        type=argparsing.positive_int,
        help='Number of simulated devices')
    parser.add_argument(
        '--seed',
        dest='dataset_seed',
        type=argparsing.nonnegative_int,
        help='Master seed of all random draws')
    parser.add_argument(
        '--out',
        dest='dataset_path',
        help='Directory in which to write the dataset')
    parser.add_argument(
        '--vds-start',
        type=float,
        help='First drain-source voltage of the sweep')
    parser.add_argument(
        '--vds-stop',
        type=float,
        help='Last drain-source voltage of the sweep')
    parser.add_argument(
        '--vds-step',
        type=argparsing.positive_float,
        help='Drain-source voltage step')
    parser.add_argument(
        '--vgs-list',
        dest='v_gs_list',
        type=argparsing.comma_list(float),
        help='Comma-separated gate-source voltages of each device')
    parser.add_argument(
        '--range',
        dest='ranges',
        action='append',
        default=[],
        type=argparsing.range_override,
        help='Replace the sampling range of one parameter: NAME=MIN:MAX[:LAW] or NAME=fixed '
             '(may be given more than once)')
    parser.add_argument(
        '--target',
        dest='target_param',
        choices=TARGET_NAMES,
        help='Device parameter the network will learn to retrieve')
    parser.add_argument(
        '--noise',
        dest='noise_rel',
        type=argparsing.nonnegative_float,
        help='Relative standard deviation of noise added to the currents')
    parser.add_argument(
        '--split-granularity',
        choices=(GRANULARITY_DEVICE, GRANULARITY_CURVE),
        help='Assign whole devices or individual curves to splits')
    parser.add_argument(
        '--jobs',
        dest='generate_jobs',
        type=argparsing.positive_int,
        help='Number of worker processes')
    parser.add_argument(
        '--compress',
        dest='compress_dataset',
        action='store_const',
        const=True,
        help='Compress the data table with zstd')
    return parser.parse_args(args=args)


def main(argv: Optional[list[str]] = None) -> int:
    argparsing.load_config(argv)
    args = parse_args(argv)
    log.setup(args)

    try:
        rc = runconfig.RunConfig.from_config().override(**vars(args))
        if args.ranges:
            rc = rc.override(parameter_ranges={**rc.parameter_ranges, **dict(args.ranges)})
        if rc.n_devices < dataset.MIN_DEVICES:
            raise InvalidConfig(
                f'At least {dataset.MIN_DEVICES} devices are needed, not {rc.n_devices}')
        log.log_settings(rc.to_dict())
        with log.timed('Generation'):
            summary = generate(rc)
    except errors.Level3InvError as e:
        logging.error(e)
        return e.exit_code

    for key, value in summary.items():
        print(f'{key}={value}')
    return 0


if __name__ == '__main__':
    sys.exit(main())
