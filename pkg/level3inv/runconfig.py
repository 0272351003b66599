"""Resolved settings of one program run.

Values come from the configuration (configdef defaults overridden by the user's config file)
and are then overridden by command-line flags. The resolved settings are stored in every
dataset manifest and model checkpoint.
"""

import dataclasses
from dataclasses import dataclass
from typing import Any, Mapping

from level3inv import config
from level3inv import dataset
from level3inv.datasetdef import VdsGrid
from level3inv.devicedef import DEVICE_RANGES, ParameterRange, SamplingLaw
from level3inv.neuralnet import InvalidConfig, MlpConfig

# Settings holding file names, which are expanded with config.expand
PATH_FIELDS = ('dataset_path', 'model_path', 'report_path')


def parse_range_override(text: str) -> ParameterRange:
    """Parse a range override of the form NAME=MIN:MAX[:LAW] or NAME=fixed.

    LAW defaults to the parameter's usual sampling law. A fixed parameter is held at its
    default value.

    Raises:
        ValueError: the override is malformed or names an unknown parameter
    """
    name, sep, value = text.partition('=')
    name = name.strip()
    if not sep:
        raise ValueError(f'Range override {text!r} is not of the form NAME=MIN:MAX[:LAW]')
    if name not in DEVICE_RANGES:
        raise ValueError(f'Unknown parameter {name!r} in range override')
    bounds = DEVICE_RANGES[name]
    value = value.strip()
    if value == SamplingLaw.FIXED.value:
        return ParameterRange(name, bounds.default, bounds.default, SamplingLaw.FIXED,
                              bounds.default)
    fields = value.split(':')
    if len(fields) not in (2, 3):
        raise ValueError(f'Range override {text!r} is not of the form NAME=MIN:MAX[:LAW]')
    law = SamplingLaw(fields[2]) if len(fields) == 3 else bounds.law
    if law == SamplingLaw.FIXED:
        raise ValueError(f'Write {name}=fixed to hold {name} at its default value')
    return ParameterRange(name, float(fields[0]), float(fields[1]), law, bounds.default)


@dataclass(frozen=True)
class RunConfig:
    """Every setting of generation, training and the files they use."""

    n_devices: int
    dataset_seed: int
    vds_start: float
    vds_stop: float
    vds_step: float
    v_gs_list: tuple[float, ...]
    parameter_ranges: dict[str, str]  # override text per parameter, as in the config file
    target_param: str
    noise_rel: float
    split_fractions: tuple[float, ...]
    split_granularity: str
    generate_jobs: int
    compress_dataset: bool
    hidden_layers: tuple[int, ...]
    hidden_activation: str
    sigmoid_k: float
    learning_rate: float
    batch_size: int
    epochs: int
    adam_beta1: float
    adam_beta2: float
    adam_epsilon: float
    train_seed: int
    select_best_val: bool
    dataset_path: str
    model_path: str
    report_path: str

    @classmethod
    def from_config(cls) -> 'RunConfig':
        """Build the settings from the loaded configuration."""
        values = {}
        for f in dataclasses.fields(cls):
            values[f.name] = config.expand(f.name) if f.name in PATH_FIELDS else config.get(f.name)
        return cls.from_dict(values)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> 'RunConfig':
        return cls(**{
            **d,
            'v_gs_list': tuple(float(v) for v in d['v_gs_list']),
            'parameter_ranges': dict(d['parameter_ranges']),
            'split_fractions': tuple(float(v) for v in d['split_fractions']),
            'hidden_layers': tuple(int(v) for v in d['hidden_layers']),
        })

    def override(self, **flags) -> 'RunConfig':
        """Return a copy with the given settings replaced; None values are ignored."""
        names = {f.name for f in dataclasses.fields(self)}
        changes = {k: v for k, v in flags.items() if v is not None and k in names}
        return RunConfig.from_dict({**self.to_dict(), **changes})

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for name in ('v_gs_list', 'split_fractions', 'hidden_layers'):
            d[name] = list(d[name])
        return d

    def grid(self) -> VdsGrid:
        """Drain-source voltage grid.

        Raises:
            InvalidConfig: the grid is empty or malformed
        """
        try:
            return VdsGrid(self.vds_start, self.vds_stop, self.vds_step)
        except ValueError as e:
            raise InvalidConfig(str(e)) from e

    def ranges(self) -> dict[str, ParameterRange]:
        """Sampling ranges of every parameter with the configured overrides applied.

        Raises:
            InvalidConfig: an override is malformed
            InvalidRange: a resulting range is not valid
        """
        overrides = {}
        for name, text in self.parameter_ranges.items():
            try:
                prange = parse_range_override(f'{name}={text}')
            except ValueError as e:
                raise InvalidConfig(str(e)) from e
            overrides[prange.name] = prange
        ranges = dataset.override_ranges(overrides)
        dataset.validate_ranges(ranges)
        return ranges

    def mlp_config(self, n_inputs: int) -> MlpConfig:
        """Network settings for curves of n_inputs points.

        Raises:
            InvalidConfig: the settings are not usable
        """
        mlp = MlpConfig(
            layer_sizes=(n_inputs, *self.hidden_layers, 1),
            hidden_activation=self.hidden_activation,
            sigmoid_k=self.sigmoid_k,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_epsilon=self.adam_epsilon,
            init_seed=self.train_seed)
        mlp.validate()
        return mlp
