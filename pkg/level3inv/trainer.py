"""Train, evaluate and apply the parameter-retrieval network.

Metrics are reported in two spaces: mse, msle and mae compare the normalized network output
against the normalized target, while mae_meters and mape_percent_meters compare the
denormalized prediction against the target parameter in its SI unit (meters for L).
"""

import csv
import dataclasses
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from level3inv import datasetio
from level3inv import errors
from level3inv import neuralnet
from level3inv.dataset import normalize_features
from level3inv.datasetdef import SPLITS, CurveSample, DatasetManifest
from level3inv.metrics import metric_suite
from level3inv.neuralnet import MlpConfig, MlpModel, ShapeMismatch

# Random stream of the per-epoch shuffle, derived from the training seed
STREAM_SHUFFLE = 1

REPORT_HEADER = ('epoch', 'split', 'mse', 'msle', 'mae', 'mae_meters', 'mape_percent_meters',
                 'seconds')


class DataModelMismatch(errors.Level3InvError):
    """The dataset doesn't fit the network's input or output layer."""

    exit_code = 5


class NumericalFailure(errors.Level3InvError):
    """Training produced a non-finite value."""

    exit_code = 6


class UnknownSplit(errors.Level3InvError):
    """The requested split doesn't exist or holds no samples."""

    exit_code = 5


@dataclass(frozen=True)
class SplitMetrics:
    mse: float
    msle: float
    mae: float
    mae_meters: float
    mape_percent_meters: float

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in dataclasses.astuple(self))


@dataclass(frozen=True)
class EpochRow:
    """Metrics of one split after one epoch."""

    epoch: int
    split: str
    metrics: SplitMetrics
    seconds: float = field(default=0.0, compare=False)  # wall clock of the whole epoch


@dataclass
class TrainReport:
    rows: list[EpochRow] = field(default_factory=list)
    seeds: dict[str, int] = field(default_factory=dict)
    selected_epoch: int = 0  # epoch whose weights were returned; 0 is the untrained model

    def rows_for(self, split: str) -> list[EpochRow]:
        return [r for r in self.rows if r.split == split]

    def final(self, split: str) -> Optional[EpochRow]:
        rows = self.rows_for(split)
        return rows[-1] if rows else None


@dataclass
class SplitArrays:
    """Samples of one split stacked for batch processing."""

    features: np.ndarray  # (samples, points)
    targets: np.ndarray   # normalized labels
    labels: np.ndarray    # labels in SI units

    def __len__(self) -> int:
        return len(self.targets)


def split_arrays(samples: Sequence[CurveSample], manifest: DatasetManifest,
                 split: str) -> SplitArrays:
    chosen = [s for s in samples if manifest.split_of(s) == split]
    n_points = manifest.grid.count
    return SplitArrays(
        features=np.array([s.features for s in chosen]).reshape(len(chosen), n_points),
        targets=np.array([s.label_normalized for s in chosen], dtype=np.float64),
        labels=np.array([s.label for s in chosen], dtype=np.float64))


def check_model_fits(model_config: MlpConfig, manifest: DatasetManifest):
    """Ensure the network accepts the dataset's curves and produces one value.

    Raises:
        DataModelMismatch: the layer sizes don't match the dataset
    """
    if model_config.layer_sizes[0] != manifest.grid.count:
        raise DataModelMismatch(f'Network takes {model_config.layer_sizes[0]} inputs but the '
                                f'dataset curves have {manifest.grid.count} points')
    if model_config.layer_sizes[-1] != 1:
        raise DataModelMismatch(f'Network has {model_config.layer_sizes[-1]} outputs; '
                                'one target parameter is retrieved')


def evaluate_predictions(predictions: np.ndarray, arrays: SplitArrays,
                         manifest: DatasetManifest) -> SplitMetrics:
    """Score normalized predictions in normalized and in SI space."""
    predictions = np.ravel(predictions)
    normalized = metric_suite(predictions, arrays.targets, mape=False)
    with np.errstate(over='ignore'):
        denormalized = manifest.target.denormalize(predictions)
    si = metric_suite(denormalized, arrays.labels, mape=True)
    return SplitMetrics(normalized.mse, normalized.msle, normalized.mae, si.mae,
                        si.mape_percent)


def evaluate_arrays(model: MlpModel, arrays: SplitArrays,
                    manifest: DatasetManifest) -> SplitMetrics:
    return evaluate_predictions(neuralnet.forward(model, arrays.features), arrays, manifest)


def train_samples(samples: Sequence[CurveSample], manifest: DatasetManifest,
                  config: MlpConfig, train_seed: int,
                  select_best_val: bool = False) -> tuple[MlpModel, TrainReport]:
    """Train a network on the training split of samples already in memory.

    The network is initialized from train_seed and the training samples are shuffled every
    epoch by a generator derived from it. Every non-empty split is evaluated after each
    epoch; only the training split influences the weights (and the validation split, when
    select_best_val picks the epoch with the lowest validation MSE).

    Raises:
        InvalidConfig: the configuration is not usable
        DataModelMismatch: the network doesn't fit the dataset
        NumericalFailure: a loss or metric became non-finite
    """
    config = dataclasses.replace(config, init_seed=train_seed)
    config.validate()
    check_model_fits(config, manifest)
    arrays = {split: split_arrays(samples, manifest, split) for split in SPLITS}
    train = arrays['train']
    if not len(train):
        raise DataModelMismatch('The training split holds no samples')
    evaluated = [split for split in SPLITS if len(arrays[split])]

    model = neuralnet.init_model(config)
    state = neuralnet.AdamState.zeros(model)
    rng = np.random.default_rng([train_seed, STREAM_SHUFFLE])
    report = TrainReport(seeds={'dataset_seed': manifest.master_seed, 'train_seed': train_seed})
    best_model = model
    best_val = math.inf
    if select_best_val and not len(arrays['val']):
        logging.warning('The validation split is empty; keeping the final epoch')

    logging.info(f'Training on {len(train)} samples for {config.epochs} epochs')
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(len(train))
        for batch_no, begin in enumerate(range(0, len(train), config.batch_size), start=1):
            index = order[begin:begin + config.batch_size]
            inputs = train.features[index]
            targets = train.targets[index]
            predictions, cache = neuralnet.forward(model, inputs, cache=True)
            loss = neuralnet.mse_loss(predictions, targets)
            if not math.isfinite(loss):
                raise NumericalFailure(f'Loss became {loss} in epoch {epoch} batch {batch_no}')
            gradients = neuralnet.backward(model, cache, inputs, targets)
            model, state = neuralnet.adam_step(model, gradients, state)

        epoch_metrics = {}
        for split in evaluated:
            metrics = evaluate_arrays(model, arrays[split], manifest)
            if not metrics.is_finite():
                raise NumericalFailure(f'Non-finite {split} metrics after epoch {epoch}: '
                                       f'{metrics}')
            epoch_metrics[split] = metrics
        seconds = time.perf_counter() - start
        report.rows.extend(EpochRow(epoch, split, metrics, seconds)
                           for split, metrics in epoch_metrics.items())
        logging.info(f'Epoch {epoch}: ' + ' '.join(
            f'{split}_mse={m.mse:.4g} {split}_mape={m.mape_percent_meters:.3g}%'
            for split, m in epoch_metrics.items()))

        if select_best_val and 'val' in epoch_metrics and epoch_metrics['val'].mse < best_val:
            best_val = epoch_metrics['val'].mse
            best_model = model
            report.selected_epoch = epoch

    if select_best_val and report.selected_epoch:
        logging.info(f'Selected the weights of epoch {report.selected_epoch}')
        return best_model, report
    report.selected_epoch = config.epochs
    return model, report


def train(directory: str, config: MlpConfig, train_seed: int,
          select_best_val: bool = False) -> tuple[MlpModel, TrainReport, DatasetManifest]:
    """Train a network on the dataset stored in a directory.

    Raises:
        IoError: the dataset could not be read
        InvalidConfig: the configuration is not usable
        DataModelMismatch: the network doesn't fit the dataset
        NumericalFailure: a loss or metric became non-finite
    """
    samples, manifest = datasetio.read_dataset(directory)
    model, report = train_samples(samples, manifest, config, train_seed, select_best_val)
    return model, report, manifest


def evaluate_samples(model: MlpModel, samples: Sequence[CurveSample],
                     manifest: DatasetManifest, split: str) -> SplitMetrics:
    """Score a network on one split of samples already in memory.

    Raises:
        UnknownSplit: the split is unknown or empty
        DataModelMismatch: the network doesn't fit the dataset
    """
    if split not in SPLITS:
        raise UnknownSplit(f'Unknown split {split}; use one of {", ".join(SPLITS)}')
    check_model_fits(model.config, manifest)
    arrays = split_arrays(samples, manifest, split)
    if not len(arrays):
        raise UnknownSplit(f'The {split} split holds no samples')
    return evaluate_arrays(model, arrays, manifest)


def evaluate(model: MlpModel, directory: str, split: str) -> SplitMetrics:
    """Score a network on one split of the dataset stored in a directory.

    Raises:
        IoError: the dataset could not be read
        UnknownSplit: the split is unknown or empty
        DataModelMismatch: the network doesn't fit the dataset
    """
    if split not in SPLITS:
        raise UnknownSplit(f'Unknown split {split}; use one of {", ".join(SPLITS)}')
    samples, manifest = datasetio.read_dataset(directory)
    return evaluate_samples(model, samples, manifest, split)


def predict(model: MlpModel, raw_curve: Sequence[float], manifest: DatasetManifest) -> float:
    """Retrieve the target parameter of the device that produced one curve, in SI units.

    Raises:
        ShapeMismatch: the curve doesn't have one current per grid point
        DataModelMismatch: the network doesn't fit the dataset
    """
    curve = np.asarray(raw_curve, dtype=np.float64)
    if curve.ndim != 1 or curve.size != manifest.grid.count:
        raise ShapeMismatch(f'Curve has {curve.size} values; expected {manifest.grid.count}')
    check_model_fits(model.config, manifest)
    features = normalize_features(curve, manifest.normalization)
    y = neuralnet.forward(model, features)[0, 0]
    return float(manifest.target.denormalize(y))


def report_rows(report: TrainReport, timing: bool = True) -> list[list[str]]:
    return [[str(row.epoch), row.split, repr(row.metrics.mse), repr(row.metrics.msle),
             repr(row.metrics.mae), repr(row.metrics.mae_meters),
             repr(row.metrics.mape_percent_meters),
             repr(row.seconds) if timing else '0']
            for row in report.rows]


def write_report(report: TrainReport, path: str, timing: bool = True):
    """Write the per-epoch metrics as a CSV file.

    Without timing the seconds column is 0 so that identical runs give identical files.

    Raises:
        IoError: the file could not be written
    """
    try:
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        with open(path, 'w', encoding='UTF-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(REPORT_HEADER)
            writer.writerows(report_rows(report, timing))
    except OSError as e:
        raise errors.IoError(f'Cannot write report {path}: {e}') from e
    logging.info(f'Wrote {len(report.rows)} report rows to {path}')


def save_checkpoint(model: MlpModel, path: str, manifest: DatasetManifest,
                    report: Optional[TrainReport] = None, run_config: Optional[dict] = None):
    """Write a model along with everything needed to apply it to new curves.

    Raises:
        IoError: the file could not be written
    """
    extra = {'manifest': manifest.to_dict(), 'run_config': dict(run_config or {})}
    if report is not None:
        extra['seeds'] = dict(report.seeds)
        extra['selected_epoch'] = report.selected_epoch
    neuralnet.save_model(model, path, extra)


def load_checkpoint(path: str) -> tuple[MlpModel, DatasetManifest]:
    """Read a model written by save_checkpoint along with its dataset manifest.

    Raises:
        IoError: the file could not be read
        SchemaMismatch: unsupported checkpoint or manifest version
        CorruptData: the file is malformed
    """
    model, d = neuralnet.load_model(path)
    if not isinstance(d.get('manifest'), dict):
        raise errors.CorruptData(f'Model file {path} holds no dataset manifest')
    return model, datasetio.manifest_from_dict(d['manifest'], path)
