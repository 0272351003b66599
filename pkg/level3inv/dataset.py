"""Generate datasets of simulated transfer curves.

Every random draw comes from a numpy Generator seeded by a tuple derived from the master seed,
so each device is a pure function of (master_seed, device_index, attempt) and the dataset does
not depend on the order or parallelism of generation.
"""

import concurrent.futures
import dataclasses
import functools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from level3inv import errors
from level3inv import level3
from level3inv.datasetdef import (CURRENT_FLOOR, GRANULARITY_CURVE, GRANULARITY_DEVICE, SPLITS,
                                  STD_FLOOR, CurveSample, DatasetManifest, Normalization,
                                  TargetSpec, VdsGrid)
from level3inv.devicedef import (DEVICE_RANGES, DEVICE_TEMPERATURE, PARAM_NAMES, TARGET_NAMES,
                                 DeviceParams, ParameterRange, SamplingLaw)


# Fewest devices in a generated dataset
MIN_DEVICES = 10

# Number of times a device is redrawn after its curves fail to solve
RETRIES = 3

# Largest fraction of devices that may need more than RETRIES redraws
MAX_FAILURE_FRACTION = 0.01

# A device needing more redraws than this aborts the whole generation
MAX_ATTEMPTS = 100

# Independent random streams derived from the master seed
STREAM_PARAMS = 0
STREAM_NOISE = 1
STREAM_SPLIT = 2


class InvalidRange(errors.Level3InvError):
    """A parameter range is empty, unknown or outside the simulated device ranges."""

    exit_code = 3


class GenerationFailure(errors.Level3InvError):
    """Too many devices could not be simulated."""

    exit_code = 3


@dataclass
class SimulatedDevice:
    """Result of simulating one device."""

    device_id: int
    params: DeviceParams
    currents: np.ndarray  # one row per gate-source voltage
    attempts: int         # number of draws that were needed


def validate_ranges(ranges: Mapping[str, ParameterRange]):
    """Check a set of sampling ranges against the simulated device ranges.

    Raises:
        InvalidRange: a range is missing, unknown, empty or out of bounds
    """
    if unknown := set(ranges) - set(PARAM_NAMES):
        raise InvalidRange(f'Unknown parameters: {", ".join(sorted(unknown))}')
    for name in PARAM_NAMES:
        if name not in ranges:
            raise InvalidRange(f'Missing range for parameter {name}')
        prange = ranges[name]
        bounds = DEVICE_RANGES[name]
        if prange.law == SamplingLaw.FIXED:
            if not bounds.minimum <= prange.default <= bounds.maximum:
                raise InvalidRange(f'Fixed value of {name} out of bounds: {prange.default}')
            continue
        if not prange.minimum < prange.maximum:
            raise InvalidRange(
                f'Empty range for {name}: min {prange.minimum} >= max {prange.maximum}')
        if prange.minimum < bounds.minimum or prange.maximum > bounds.maximum:
            raise InvalidRange(
                f'Range of {name} [{prange.minimum}, {prange.maximum}] is outside '
                f'[{bounds.minimum}, {bounds.maximum}]')
        if prange.law == SamplingLaw.LOG and prange.minimum <= 0:
            raise InvalidRange(f'Log-uniform range of {name} must be positive')


def override_ranges(overrides: Mapping[str, ParameterRange]) -> dict[str, ParameterRange]:
    """Return the default device ranges with some of them replaced."""
    return {**DEVICE_RANGES, **overrides}


def _draw(prange: ParameterRange, u: float) -> float:
    """Map a uniform [0, 1) draw onto a parameter range."""
    if prange.law == SamplingLaw.FIXED:
        return prange.default
    if prange.law == SamplingLaw.LOG:
        low = math.log10(prange.minimum)
        value = 10.0 ** (low + u * (math.log10(prange.maximum) - low))
    else:
        value = prange.minimum + u * (prange.maximum - prange.minimum)
    return min(max(value, prange.minimum), prange.maximum)


def sample_params(ranges: Mapping[str, ParameterRange], device_index: int, master_seed: int,
                  attempt: int = 0) -> DeviceParams:
    """Draw the parameters of one device.

    One uniform variate is taken per parameter in PARAM_NAMES order, including fixed ones, so
    fixing a parameter does not change the values drawn for the others.

    Raises:
        InvalidRange: the ranges are not valid
    """
    validate_ranges(ranges)
    rng = np.random.default_rng([master_seed, device_index, attempt, STREAM_PARAMS])
    draws = rng.random(len(PARAM_NAMES))
    values = {name: _draw(ranges[name], float(u)) for name, u in zip(PARAM_NAMES, draws)}
    return DeviceParams(**values, temperature=DEVICE_TEMPERATURE)


def add_noise(currents: np.ndarray, noise_rel: float, device_index: int, master_seed: int,
              attempt: int = 0) -> np.ndarray:
    """Apply multiplicative Gaussian measurement noise to a device's curves.

    Currents are kept nonnegative.
    """
    if not noise_rel:
        return currents
    rng = np.random.default_rng([master_seed, device_index, attempt, STREAM_NOISE])
    noisy = currents * (1.0 + noise_rel * rng.standard_normal(currents.shape))
    return np.maximum(noisy, 0.0)


def simulate_device(device_index: int, ranges: Mapping[str, ParameterRange], master_seed: int,
                    grid: VdsGrid, v_gs_list: Sequence[float],
                    noise_rel: float = 0.0) -> SimulatedDevice:
    """Draw a device and simulate its curves, redrawing it if the solver fails.

    Raises:
        GenerationFailure: the device failed MAX_ATTEMPTS times
    """
    for attempt in range(MAX_ATTEMPTS):
        params = sample_params(ranges, device_index, master_seed, attempt)
        try:
            currents = level3.curve_set(params, v_gs_list, grid)
        except level3.NonConvergence as e:
            logging.info(f'Device {device_index} attempt {attempt} failed: {e}')
            continue
        currents = add_noise(currents, noise_rel, device_index, master_seed, attempt)
        return SimulatedDevice(device_index, params, currents, attempt + 1)
    raise GenerationFailure(f'Device {device_index} failed {MAX_ATTEMPTS} times')


def simulate_devices(n_devices: int, ranges: Mapping[str, ParameterRange], master_seed: int,
                     grid: VdsGrid, v_gs_list: Sequence[float], noise_rel: float = 0.0,
                     jobs: int = 1) -> list[SimulatedDevice]:
    """Simulate devices 0..n_devices-1, optionally over several processes."""
    work = functools.partial(simulate_device, ranges=ranges, master_seed=master_seed, grid=grid,
                             v_gs_list=tuple(v_gs_list), noise_rel=noise_rel)
    if jobs <= 1:
        return [work(i) for i in range(n_devices)]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
        chunksize = max(1, n_devices // (jobs * 8))
        return list(executor.map(work, range(n_devices), chunksize=chunksize))


def assign_splits(n_units: int, fractions: Sequence[float], master_seed: int) -> list[str]:
    """Assign each of n_units units to a split by a seeded shuffle.

    The train and val counts are the fractions of n_units rounded to the nearest integer; the
    test split takes the rest.
    """
    if len(fractions) != len(SPLITS) or any(f < 0 for f in fractions):
        raise ValueError(f'Invalid split fractions: {fractions}')
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f'Split fractions must sum to 1: {fractions}')
    n_train = min(n_units, round(fractions[0] * n_units))
    n_val = min(n_units - n_train, round(fractions[1] * n_units))
    rng = np.random.default_rng([master_seed, STREAM_SPLIT])
    order = rng.permutation(n_units)
    assignment = ['test'] * n_units
    for pos, unit in enumerate(order):
        if pos < n_train:
            assignment[unit] = 'train'
        elif pos < n_train + n_val:
            assignment[unit] = 'val'
    return assignment


def split_dataset(samples: Sequence[CurveSample], manifest: DatasetManifest,
                  fractions: Sequence[float], master_seed: int) -> DatasetManifest:
    """Return a copy of the manifest with every device (or curve) assigned to a split."""
    if manifest.split_granularity == GRANULARITY_CURVE:
        n_units = len(samples)
    elif manifest.split_granularity == GRANULARITY_DEVICE:
        n_units = manifest.n_devices
    else:
        raise ValueError(f'Unknown split granularity {manifest.split_granularity}')
    assignment = assign_splits(n_units, fractions, master_seed)
    return dataclasses.replace(manifest, split_fractions=tuple(fractions),
                               split_assignment=tuple(assignment))


def log_currents(raw_currents: np.ndarray, current_floor: float = CURRENT_FLOOR) -> np.ndarray:
    return np.log10(np.asarray(raw_currents, dtype=np.float64) + current_floor)


def compute_normalization(raw_currents: np.ndarray) -> Normalization:
    """Compute per-feature statistics of log currents over rows of curves."""
    logs = log_currents(raw_currents)
    return Normalization(mean=logs.mean(axis=0), std=np.maximum(logs.std(axis=0), STD_FLOOR),
                         current_floor=CURRENT_FLOOR)


def normalize_features(raw_currents: np.ndarray, normalization: Normalization) -> np.ndarray:
    """Map raw currents (one curve or rows of curves) onto standardized log features."""
    return ((log_currents(raw_currents, normalization.current_floor) - normalization.mean)
            / normalization.std)


def target_spec(ranges: Mapping[str, ParameterRange], target: str) -> TargetSpec:
    """Return the transform for the target parameter.

    Raises:
        InvalidRange: the target cannot be learned over its range
    """
    if target not in TARGET_NAMES:
        raise InvalidRange(f'Parameter {target} cannot be a target; use one of '
                           f'{", ".join(TARGET_NAMES)}')
    if ranges[target].law == SamplingLaw.FIXED:
        raise InvalidRange(f'Target parameter {target} is fixed')
    return TargetSpec.from_range(ranges[target])


def make_sample(device_id: int, v_gs: float, raw_currents: np.ndarray, params: DeviceParams,
                manifest: DatasetManifest) -> CurveSample:
    """Label one curve with the manifest's target; features are left empty until normalized."""
    label = float(getattr(params, manifest.target.name))
    return CurveSample(device_id=device_id, v_gs=v_gs, raw_currents=raw_currents,
                       features=np.empty(0), params=params, label=label,
                       label_normalized=float(manifest.target.normalize(label)))


def make_samples(devices: Iterable[SimulatedDevice], manifest: DatasetManifest
                 ) -> list[CurveSample]:
    return [make_sample(device.device_id, v_gs, device.currents[row], device.params, manifest)
            for device in devices
            for row, v_gs in enumerate(manifest.v_gs_list)]


def apply_normalization(samples: Iterable[CurveSample], normalization: Normalization):
    """Fill in the features of every sample."""
    for sample in samples:
        sample.features = normalize_features(sample.raw_currents, normalization)


def build_dataset(n_devices: int, ranges: Mapping[str, ParameterRange], grid: VdsGrid,
                  v_gs_list: Sequence[float], master_seed: int,
                  fractions: Sequence[float] = (0.8, 0.1, 0.1),
                  target: str = 'L',
                  noise_rel: float = 0.0,
                  split_granularity: str = GRANULARITY_DEVICE,
                  jobs: int = 1,
                  run_config: Optional[dict] = None
                  ) -> tuple[list[CurveSample], DatasetManifest]:
    """Simulate a dataset of n_devices x len(v_gs_list) curves.

    Devices are split before the feature statistics are computed so that only the training
    split contributes to them.

    Raises:
        InvalidRange: the ranges or target are not valid
        GenerationFailure: too many devices needed to be redrawn
        ValueError: too few devices, or a bad gate voltage list, noise level or split
    """
    if n_devices < MIN_DEVICES:
        raise ValueError(f'At least {MIN_DEVICES} devices are needed, not {n_devices}')
    if not len(v_gs_list):
        raise ValueError('At least one gate-source voltage is needed')
    if len(set(v_gs_list)) != len(v_gs_list):
        raise ValueError(f'Repeated gate-source voltage in {list(v_gs_list)}')
    if not (math.isfinite(noise_rel) and noise_rel >= 0):
        raise ValueError(f'Noise level must be a nonnegative number, not {noise_rel}')
    validate_ranges(ranges)
    spec = target_spec(ranges, target)

    logging.info(f'Simulating {n_devices} devices at {len(v_gs_list)} gate voltages '
                 f'over {grid.count} drain voltages')
    devices = simulate_devices(n_devices, ranges, master_seed, grid, v_gs_list, noise_rel, jobs)
    retries = sum(d.attempts - 1 for d in devices)
    failed = sum(1 for d in devices if d.attempts > RETRIES + 1)
    if failed > MAX_FAILURE_FRACTION * n_devices:
        raise GenerationFailure(
            f'{failed} of {n_devices} devices failed after {RETRIES} retries')
    if retries:
        logging.warning(f'{retries} device draws were retried')

    manifest = DatasetManifest(
        master_seed=master_seed, n_devices=n_devices,
        v_gs_list=tuple(float(v) for v in v_gs_list), grid=grid,
        parameter_ranges=dict(ranges), target=spec, split_granularity=split_granularity,
        retry_count=retries, noise_rel=noise_rel, temperature=DEVICE_TEMPERATURE,
        run_config=dict(run_config or {}))
    samples = make_samples(devices, manifest)
    manifest = split_dataset(samples, manifest, fractions, master_seed)

    train_rows = [s.raw_currents for s in samples if manifest.split_of(s) == 'train']
    if not train_rows:
        raise ValueError('The training split is empty')
    manifest = dataclasses.replace(manifest,
                                   normalization=compute_normalization(np.array(train_rows)))
    apply_normalization(samples, manifest.normalization)
    return samples, manifest
