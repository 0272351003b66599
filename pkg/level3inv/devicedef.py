"""Type definitions of simulated power MOSFET devices."""

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

# A scalar or an array of values to be broadcast elementwise
ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class DeviceParams:
    """Physical parameters of one simulated device.

    Fields may also hold numpy arrays to evaluate a batch of devices at once.
    """

    L: ArrayLike            # channel length, m
    W: ArrayLike            # channel width, m
    R_d: ArrayLike          # drain series resistance, ohm
    R_s: ArrayLike          # source series resistance, ohm
    V_t: ArrayLike          # threshold voltage, V
    KP: ArrayLike           # intrinsic transconductance, A/V^2
    gamma: ArrayLike        # bulk threshold, V^0.5
    phi: ArrayLike          # surface potential, V
    theta: ArrayLike        # gate-voltage mobility degradation, 1/V
    temperature: float = 25.0  # Celsius; stored but does not affect the current

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in PARAM_NAMES}


@dataclass(frozen=True)
class BiasPoint:
    """Terminal voltages applied to a device."""

    v_gs: float  # gate-source, V
    v_ds: float  # drain-source, V; must not be negative


@dataclass(frozen=True)
class EffectiveParams:
    """Bias-dependent quantities used by the drain current equations."""

    f_b: ArrayLike      # body-effect factor
    kp_eff: ArrayLike   # mobility-degraded KP, A/V^2
    beta: ArrayLike     # kp_eff * W / L, A/V^2
    v_dssat: ArrayLike  # saturation drain-source voltage, V


class SamplingLaw(str, enum.Enum):
    """How a parameter is drawn over its range."""

    LOG = 'log'          # log-uniform between minimum and maximum
    UNIFORM = 'uniform'  # uniform between minimum and maximum
    FIXED = 'fixed'      # always the default value


@dataclass(frozen=True)
class ParameterRange:
    """Sampling range of one device parameter."""

    name: str
    minimum: float
    maximum: float
    law: SamplingLaw
    default: float

    def to_dict(self) -> dict:
        return {'min': self.minimum, 'max': self.maximum, 'law': self.law.value,
                'default': self.default}

    @classmethod
    def from_dict(cls, name: str, d: dict) -> 'ParameterRange':
        return cls(name, float(d['min']), float(d['max']), SamplingLaw(d['law']),
                   float(d['default']))


# Order of the parameters in sampling streams and data files
PARAM_NAMES = ('L', 'W', 'R_d', 'R_s', 'V_t', 'KP', 'gamma', 'phi', 'theta')

# SI unit of each parameter
PARAM_UNITS = {
    'L': 'm',
    'W': 'm',
    'R_d': 'ohm',
    'R_s': 'ohm',
    'V_t': 'V',
    'KP': 'A/V^2',
    'gamma': 'V^0.5',
    'phi': 'V',
    'theta': '1/V',
}

# Full simulation ranges and default values of the power MOS parameters.
# Parameters spanning two or more decades are drawn log-uniformly.
DEVICE_RANGES = {
    'L': ParameterRange('L', 1e-7, 5e-6, SamplingLaw.LOG, 1e-7),
    'W': ParameterRange('W', 1e-2, 10.0, SamplingLaw.LOG, 1.0),
    'R_d': ParameterRange('R_d', 1e-4, 1e-2, SamplingLaw.LOG, 1e-3),
    'R_s': ParameterRange('R_s', 1e-4, 1e-2, SamplingLaw.LOG, 1e-3),
    'V_t': ParameterRange('V_t', 2.0, 8.0, SamplingLaw.UNIFORM, 3.0),
    'KP': ParameterRange('KP', 2e-7, 20.0, SamplingLaw.LOG, 2e-5),
    'gamma': ParameterRange('gamma', 0.0, 10.0, SamplingLaw.UNIFORM, 0.0),
    'phi': ParameterRange('phi', 0.0, 6.0, SamplingLaw.UNIFORM, 0.6),
    'theta': ParameterRange('theta', 0.0, 10.0, SamplingLaw.UNIFORM, 0.0),
}

# The simulations are all done at this fixed temperature
DEVICE_TEMPERATURE = 25.0

# Parameters an inverse model may be trained to retrieve; all have ranges bounded away from zero
TARGET_NAMES = ('L', 'W', 'R_d', 'R_s', 'V_t', 'KP')


def default_device() -> DeviceParams:
    """Return a device with every parameter at its default value."""
    return DeviceParams(**{name: DEVICE_RANGES[name].default for name in PARAM_NAMES})
