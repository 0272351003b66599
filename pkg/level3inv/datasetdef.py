"""Type definitions of simulated transfer-curve datasets."""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from level3inv.devicedef import DeviceParams, ParameterRange, SamplingLaw

# Version of the manifest and data table layout written by this code
SCHEMA_VERSION = 1

# Names of the dataset splits, in reporting order
SPLITS = ('train', 'val', 'test')

# Split at the device level (all curves of a device together) or at the individual curve level
GRANULARITY_DEVICE = 'device'
GRANULARITY_CURVE = 'curve'

# Added to currents before taking the logarithm of a feature, A
CURRENT_FLOOR = 1e-12

# Smallest standard deviation used to scale a feature
STD_FLOOR = 1e-12


@dataclass(frozen=True)
class VdsGrid:
    """Uniform sweep of drain-source voltages at which a curve is sampled."""

    start: float = 0.1
    stop: float = 10.0
    step: float = 0.1

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f'V_ds step must be positive: {self.step}')
        if not self.stop > self.start:
            raise ValueError(f'V_ds stop {self.stop} must be above start {self.start}')
        if self.start < 0:
            raise ValueError(f'V_ds start must not be negative: {self.start}')

    @property
    def count(self) -> int:
        return round((self.stop - self.start) / self.step) + 1

    def points(self) -> np.ndarray:
        """Return the drain-source voltages of the sweep."""
        return np.linspace(self.start, self.stop, self.count)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> 'VdsGrid':
        return cls(float(d['start']), float(d['stop']), float(d['step']))


@dataclass(frozen=True)
class Normalization:
    """Per-feature statistics used to standardize log currents."""

    mean: np.ndarray
    std: np.ndarray
    current_floor: float = CURRENT_FLOOR

    def __eq__(self, other) -> bool:
        return (isinstance(other, Normalization)
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.std, other.std)
                and self.current_floor == other.current_floor)

    def to_dict(self) -> dict:
        return {'mean': self.mean.tolist(), 'std': self.std.tolist(),
                'current_floor': self.current_floor}

    @classmethod
    def from_dict(cls, d: dict) -> 'Normalization':
        return cls(np.array(d['mean'], dtype=np.float64), np.array(d['std'], dtype=np.float64),
                   float(d['current_floor']))


@dataclass(frozen=True)
class TargetSpec:
    """Transform between a device parameter and the [0, 1] value the network learns."""

    name: str
    law: SamplingLaw
    minimum: float
    maximum: float

    @classmethod
    def from_range(cls, prange: ParameterRange) -> 'TargetSpec':
        return cls(prange.name, prange.law, prange.minimum, prange.maximum)

    def normalize(self, value):
        if self.law == SamplingLaw.LOG:
            low = math.log10(self.minimum)
            return (np.log10(value) - low) / (math.log10(self.maximum) - low)
        return (value - self.minimum) / (self.maximum - self.minimum)

    def denormalize(self, y):
        if self.law == SamplingLaw.LOG:
            low = math.log10(self.minimum)
            return 10.0 ** (y * (math.log10(self.maximum) - low) + low)
        return y * (self.maximum - self.minimum) + self.minimum

    def to_dict(self) -> dict:
        return {'name': self.name, 'law': self.law.value, 'min': self.minimum,
                'max': self.maximum}

    @classmethod
    def from_dict(cls, d: dict) -> 'TargetSpec':
        return cls(d['name'], SamplingLaw(d['law']), float(d['min']), float(d['max']))


@dataclass(eq=False)
class CurveSample:
    """One transfer curve of one device at one gate-source voltage."""

    device_id: int
    v_gs: float
    raw_currents: np.ndarray  # drain currents on the grid, A
    features: np.ndarray      # normalized network inputs
    params: DeviceParams      # the device that produced the curve
    label: float              # target parameter value, SI units
    label_normalized: float   # target value mapped onto [0, 1]

    @property
    def label_L(self) -> float:
        return float(self.params.L)


@dataclass
class DatasetManifest:
    """Everything needed to regenerate, interpret and split a dataset."""

    master_seed: int
    n_devices: int
    v_gs_list: tuple[float, ...]
    grid: VdsGrid
    parameter_ranges: dict[str, ParameterRange]
    target: TargetSpec
    normalization: Optional[Normalization] = None
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    split_granularity: str = GRANULARITY_DEVICE
    split_assignment: tuple[str, ...] = ()  # split of each device (or curve)
    retry_count: int = 0
    noise_rel: float = 0.0
    temperature: float = 25.0
    run_config: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def n_samples(self) -> int:
        return self.n_devices * len(self.v_gs_list)

    def split_of(self, sample: CurveSample) -> str:
        """Return the split to which a sample belongs."""
        if self.split_granularity == GRANULARITY_CURVE:
            return self.split_assignment[
                sample.device_id * len(self.v_gs_list) + self.v_gs_list.index(sample.v_gs)]
        return self.split_assignment[sample.device_id]

    def check_splits(self):
        """Check that the split assignment covers every device (or curve) exactly.

        Raises:
            ValueError: the assignment disagrees with the rest of the manifest
        """
        if len(set(self.v_gs_list)) != len(self.v_gs_list):
            raise ValueError(f'Repeated gate-source voltage in {list(self.v_gs_list)}')
        if self.split_granularity == GRANULARITY_CURVE:
            expected = self.n_samples
        elif self.split_granularity == GRANULARITY_DEVICE:
            expected = self.n_devices
        else:
            raise ValueError(f'Unknown split granularity {self.split_granularity}')
        if len(self.split_assignment) != expected:
            raise ValueError(f'split_assignment has {len(self.split_assignment)} entries; '
                             f'expected {expected}')
        if unknown := set(self.split_assignment) - set(SPLITS):
            raise ValueError(f'Unknown splits {sorted(map(str, unknown))} in split_assignment')

    def to_dict(self) -> dict:
        return {
            'schema_version': self.schema_version,
            'master_seed': self.master_seed,
            'n_devices': self.n_devices,
            'v_gs_list': list(self.v_gs_list),
            'grid': self.grid.to_dict(),
            'parameter_ranges': {n: r.to_dict() for n, r in self.parameter_ranges.items()},
            'target': self.target.to_dict(),
            'normalization': self.normalization.to_dict() if self.normalization else None,
            'split_fractions': list(self.split_fractions),
            'split_granularity': self.split_granularity,
            'split_assignment': list(self.split_assignment),
            'retry_count': self.retry_count,
            'noise_rel': self.noise_rel,
            'temperature': self.temperature,
            'run_config': self.run_config,
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'DatasetManifest':
        return cls(
            master_seed=int(d['master_seed']),
            n_devices=int(d['n_devices']),
            v_gs_list=tuple(float(v) for v in d['v_gs_list']),
            grid=VdsGrid.from_dict(d['grid']),
            parameter_ranges={n: ParameterRange.from_dict(n, r)
                              for n, r in d['parameter_ranges'].items()},
            target=TargetSpec.from_dict(d['target']),
            normalization=(Normalization.from_dict(d['normalization'])
                           if d['normalization'] else None),
            split_fractions=tuple(float(f) for f in d['split_fractions']),
            split_granularity=d['split_granularity'],
            split_assignment=tuple(d['split_assignment']),
            retry_count=int(d['retry_count']),
            noise_rel=float(d['noise_rel']),
            temperature=float(d['temperature']),
            run_config=d['run_config'],
            schema_version=int(d['schema_version']),
        )
