"""Regression error metrics."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from level3inv import errors
from level3inv.neuralnet import ShapeMismatch


class DegenerateTarget(errors.Level3InvError):
    """A percentage error was requested against a zero target."""

    exit_code = 5


@dataclass(frozen=True)
class MetricRecord:
    """Errors of a set of predictions."""

    mse: float
    msle: float
    mae: float
    mape_percent: Optional[float] = None


def metric_suite(predictions: np.ndarray, targets: np.ndarray, mape: bool = True) -> MetricRecord:
    """Compute the mean squared, squared-log, absolute and absolute percentage errors.

    Negative predictions are clamped to 0 for the squared-log error only.

    Raises:
        ShapeMismatch: the number of predictions and targets differ
        DegenerateTarget: mape is requested and a target is zero
    """
    p = np.ravel(np.asarray(predictions, dtype=np.float64))
    t = np.ravel(np.asarray(targets, dtype=np.float64))
    if p.shape != t.shape:
        raise ShapeMismatch(f'{p.size} predictions but {t.size} targets')
    if not p.size:
        raise ShapeMismatch('No predictions to score')
    error = p - t
    mape_percent = None
    if mape:
        if np.any(t == 0):
            raise DegenerateTarget('Percentage error is undefined for a zero target')
        mape_percent = float(100.0 * np.mean(np.abs(error) / np.abs(t)))
    return MetricRecord(
        mse=float(np.mean(error * error)),
        msle=float(np.mean((np.log1p(np.maximum(p, 0.0)) - np.log1p(t)) ** 2)),
        mae=float(np.mean(np.abs(error))),
        mape_percent=mape_percent)
