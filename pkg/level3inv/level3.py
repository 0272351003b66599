"""SPICE Level-3 drain current equations of a power MOSFET.

Every function broadcasts elementwise over numpy arrays: voltages and the fields of DeviceParams
may all be arrays. When every input is a scalar, the result is a float.
"""

import logging
from typing import Sequence

import numpy as np

from level3inv import errors
from level3inv.datasetdef import VdsGrid
from level3inv.devicedef import ArrayLike, BiasPoint, DeviceParams, EffectiveParams


# Lower limit on the surface potential in the body-effect factor, V
PHI_MIN = 1e-3

# Weight given to the new value in each step of the series-resistance iteration
DAMPING = 0.5

# Relative accuracy of the series-resistance solution
RTOL = 1e-12

# Maximum number of damped fixed-point steps before falling back to bisection
MAX_FIXED_POINT_ITER = 200

# Maximum number of bisection steps; more than enough to collapse any float64 bracket
MAX_BISECT_ITER = 2200

# Gate-source voltages of a standard curve family, V
DEFAULT_VGS_LIST = tuple(float(v) for v in range(1, 13))

# Smallest positive float; keeps the relative tolerance nonzero at zero current
TINY = np.finfo(np.float64).tiny


class NonConvergence(errors.Level3InvError):
    """The series-resistance feedback could not be solved for a device."""

    exit_code = 3


def _result(value: ArrayLike) -> ArrayLike:
    """Return a float for a 0-d result, otherwise the array."""
    value = np.asarray(value, dtype=np.float64)
    return float(value) if value.ndim == 0 else value


def body_factor(params: DeviceParams) -> ArrayLike:
    """Return the body-effect factor f_b at zero source-bulk bias."""
    gamma = np.asarray(params.gamma, dtype=np.float64)
    phi = np.maximum(np.asarray(params.phi, dtype=np.float64), PHI_MIN)
    return _result(np.where(gamma == 0, 0.0, gamma / (4.0 * np.sqrt(phi))))


def effective_params(params: DeviceParams, v_gs_internal: ArrayLike) -> EffectiveParams:
    """Compute the bias-dependent quantities at an internal gate-source voltage."""
    overdrive = np.maximum(0.0, np.asarray(v_gs_internal, dtype=np.float64) - params.V_t)
    f_b = body_factor(params)
    kp_eff = params.KP / (1.0 + params.theta * overdrive)
    beta = kp_eff * params.W / params.L
    v_dssat = overdrive / (1.0 + f_b)
    return EffectiveParams(f_b=f_b, kp_eff=_result(kp_eff), beta=_result(beta),
                           v_dssat=_result(v_dssat))


def intrinsic_ids(params: DeviceParams, v_gs_internal: ArrayLike,
                  v_ds_internal: ArrayLike) -> ArrayLike:
    """Drain current of the intrinsic device, without series resistance.

    Implements the cutoff, linear and saturation regions.
    """
    v_gs = np.asarray(v_gs_internal, dtype=np.float64)
    v_ds = np.asarray(v_ds_internal, dtype=np.float64)
    eff = effective_params(params, v_gs)
    overdrive = v_gs - params.V_t
    on = overdrive > 0
    overdrive = np.maximum(overdrive, 0.0)
    one_fb = 1.0 + eff.f_b
    linear = eff.beta * (overdrive * v_ds - one_fb * v_ds * v_ds / 2.0)
    saturation = eff.beta / (2.0 * one_fb) * overdrive * overdrive
    ids = np.where(v_ds <= eff.v_dssat, linear, saturation)
    return _result(np.where(on, ids, 0.0))


def _feedback_ids(params: DeviceParams, v_gs: np.ndarray, v_ds: np.ndarray,
                  current: np.ndarray) -> np.ndarray:
    """Intrinsic current with the internal voltages lowered by the series resistance drops."""
    return np.asarray(intrinsic_ids(
        params,
        v_gs - current * params.R_s,
        np.maximum(0.0, v_ds - current * (params.R_s + params.R_d))), dtype=np.float64)


def solve_terminal_ids(params: DeviceParams, v_gs: ArrayLike, v_ds: ArrayLike) -> ArrayLike:
    """Solve the series-resistance feedback for the terminal drain current.

    The current I satisfies I = f(I) where f is the intrinsic current at the internal voltages.
    f never increases with I and f(0) is the current without feedback, so the root is unique
    and bracketed by [0, f(0)]. A damped fixed-point iteration is tried first, and elements
    that have not converged after MAX_FIXED_POINT_ITER steps are bisected.

    Each element is solved independently of the others.

    Raises:
        NonConvergence: an element could not be solved
    """
    v_gs = np.asarray(v_gs, dtype=np.float64)
    v_ds = np.asarray(v_ds, dtype=np.float64)
    if np.any(v_ds < 0):
        raise ValueError('Negative drain-source voltages are not modeled')
    start = np.asarray(intrinsic_ids(params, v_gs, v_ds), dtype=np.float64)
    r_total = np.asarray(params.R_s + params.R_d, dtype=np.float64)
    shape = np.broadcast_shapes(start.shape, r_total.shape)
    start = np.broadcast_to(start, shape)

    # No feedback at zero resistance, and zero current is its own solution
    done = np.broadcast_to((start == 0) | (r_total == 0), shape).copy()
    current = start.copy()
    for iteration in range(MAX_FIXED_POINT_ITER):
        if done.all():
            break
        feedback = _feedback_ids(params, v_gs, v_ds, current)
        converged = np.abs(current - feedback) <= RTOL * np.maximum(np.abs(current), TINY)
        done |= converged
        current = np.where(done, current, (1.0 - DAMPING) * current + DAMPING * feedback)
    else:
        iteration = MAX_FIXED_POINT_ITER

    if not done.all():
        logging.debug(f'Bisecting {np.count_nonzero(~done)} of {done.size} bias points '
                      f'after {iteration} fixed-point steps')
        current = np.where(done, current, _bisect(params, v_gs, v_ds, start, ~done))

    if not np.all(np.isfinite(current)):
        raise NonConvergence(f'Non-finite drain current for device {params}')
    return _result(current)


def feedback_residual(params: DeviceParams, v_gs: ArrayLike, v_ds: ArrayLike,
                      current: ArrayLike) -> np.ndarray:
    """Residual g(I) = I - f(I) of the series-resistance feedback; increasing in I."""
    current = np.asarray(current, dtype=np.float64)
    return current - _feedback_ids(params, np.asarray(v_gs, dtype=np.float64),
                                   np.asarray(v_ds, dtype=np.float64), current)


def _bisect(params: DeviceParams, v_gs: np.ndarray, v_ds: np.ndarray,
            upper: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Bisect g(I) = I - f(I) over [0, upper] for the active elements.

    g(0) <= 0 and g(upper) >= 0. An element stops at the first midpoint whose residual is within
    RTOL * max(1, I). When float64 can't resolve the root that finely, the bracket collapses to
    two adjacent floats and the end with the smaller residual is returned.

    Raises:
        NonConvergence: an element is still active after MAX_BISECT_ITER steps
    """
    lo = np.zeros_like(upper)
    hi = upper.copy()
    root = upper.copy()
    active = active.copy()
    collapsed = np.zeros_like(active)
    for _ in range(MAX_BISECT_ITER):
        if not active.any():
            break
        mid = lo + 0.5 * (hi - lo)
        g = feedback_residual(params, v_gs, v_ds, mid)
        close = np.abs(g) <= RTOL * np.maximum(1.0, mid)
        stalled = ~close & ((mid <= lo) | (mid >= hi))
        root = np.where(active & close, mid, root)
        collapsed |= active & stalled
        lo = np.where(active & ~close & ~stalled & (g < 0), mid, lo)
        hi = np.where(active & ~close & ~stalled & (g > 0), mid, hi)
        active &= ~close & ~stalled
    else:
        if active.any():
            raise NonConvergence(
                f'Bisection did not converge at {np.count_nonzero(active)} bias points '
                f'for device {params}')

    if collapsed.any():
        logging.debug(f'{np.count_nonzero(collapsed)} bias points reached the float64 '
                      'resolution before the residual tolerance')
        g_lo = np.abs(feedback_residual(params, v_gs, v_ds, lo))
        g_hi = np.abs(feedback_residual(params, v_gs, v_ds, hi))
        root = np.where(collapsed, np.where(g_lo <= g_hi, lo, hi), root)
    return root


def terminal_ids(params: DeviceParams, bias: BiasPoint) -> float:
    """Drain current at the device terminals including drain and source resistance.

    Raises:
        NonConvergence: the feedback could not be solved
    """
    return float(solve_terminal_ids(params, bias.v_gs, bias.v_ds))


def transfer_curve(params: DeviceParams, v_gs: float, grid: VdsGrid) -> np.ndarray:
    """Drain current over the grid of drain-source voltages at one gate-source voltage.

    Raises:
        NonConvergence: the feedback could not be solved
    """
    return np.asarray(solve_terminal_ids(params, v_gs, grid.points()), dtype=np.float64)


def curve_set(params: DeviceParams, v_gs_list: Sequence[float] = DEFAULT_VGS_LIST,
              grid: VdsGrid = VdsGrid()) -> np.ndarray:
    """Family of transfer curves, one row per gate-source voltage in list order.

    Raises:
        NonConvergence: the feedback could not be solved
    """
    if not len(v_gs_list):
        raise ValueError('At least one gate-source voltage is needed')
    v_gs = np.asarray(v_gs_list, dtype=np.float64)[:, np.newaxis]
    return np.asarray(solve_terminal_ids(params, v_gs, grid.points()[np.newaxis, :]),
                      dtype=np.float64)
