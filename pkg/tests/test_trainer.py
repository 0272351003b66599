"""Test trainer."""

import csv
import dataclasses
import math
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from .context import level3inv  # noqa: F401

from level3inv import dataset  # noqa: I100
from level3inv import datasetio
from level3inv import level3
from level3inv import neuralnet
from level3inv import runconfig
from level3inv import trainer
from level3inv.datasetdef import SPLITS, VdsGrid
from level3inv.neuralnet import MlpConfig, MlpModel

CONFIG = MlpConfig(layer_sizes=(100, 16, 8, 1), learning_rate=1e-3, batch_size=32, epochs=6)


def fixed_geometry_dataset(n_devices=40, seed=11):
    """A dataset in which L is the only geometry parameter that varies."""
    ranges = dataset.override_ranges({
        'W': runconfig.parse_range_override('W=fixed'),
        'KP': runconfig.parse_range_override('KP=fixed')})
    return dataset.build_dataset(n_devices, ranges, VdsGrid(), level3.DEFAULT_VGS_LIST, seed)


def constant_model(y: float) -> MlpModel:
    """A network whose output is y for every input."""
    return MlpModel(MlpConfig(layer_sizes=(100, 1)), [np.zeros((100, 1))], [np.array([y])])


class TestTrain(unittest.TestCase):
    """Test train_samples."""

    @classmethod
    def setUpClass(cls):
        cls.samples, cls.manifest = fixed_geometry_dataset()
        cls.model, cls.report = trainer.train_samples(cls.samples, cls.manifest, CONFIG, 5)

    def test_report_rows(self):
        for split in SPLITS:
            rows = self.report.rows_for(split)
            self.assertEqual(list(range(1, 7)), [r.epoch for r in rows])
            for row in rows:
                self.assertTrue(row.metrics.is_finite())
                self.assertGreaterEqual(row.seconds, 0.0)
        self.assertEqual(18, len(self.report.rows))
        self.assertEqual({'dataset_seed': 11, 'train_seed': 5}, self.report.seeds)
        self.assertEqual(6, self.report.selected_epoch)

    def test_deterministic(self):
        model, report = trainer.train_samples(self.samples, self.manifest, CONFIG, 5)
        self.assertEqual(self.report.rows, report.rows)
        for a, b in zip(self.model.weights + self.model.biases, model.weights + model.biases):
            self.assertTrue(np.array_equal(a, b))
        _, other = trainer.train_samples(self.samples, self.manifest, CONFIG, 6)
        self.assertNotEqual(self.report.rows, other.rows)

    def test_converges(self):
        rows = self.report.rows_for('train')
        self.assertLess(rows[-1].metrics.mse, rows[0].metrics.mse)

    def test_init_seed_is_train_seed(self):
        self.assertEqual(5, self.model.config.init_seed)

    def test_no_epochs(self):
        model, report = trainer.train_samples(self.samples, self.manifest,
                                              dataclasses.replace(CONFIG, epochs=0), 5)
        self.assertEqual([], report.rows)
        initial = neuralnet.init_model(dataclasses.replace(CONFIG, init_seed=5))
        for a, b in zip(initial.weights, model.weights):
            self.assertTrue(np.array_equal(a, b))

    def test_evaluate_matches_report(self):
        for split in SPLITS:
            self.assertEqual(self.report.final(split).metrics,
                             trainer.evaluate_samples(self.model, self.samples, self.manifest,
                                                      split))

    def test_no_test_influence(self):
        without_test = [s for s in self.samples if self.manifest.split_of(s) != 'test']
        model, report = trainer.train_samples(without_test, self.manifest, CONFIG, 5)
        self.assertEqual([], report.rows_for('test'))
        for split in ('train', 'val'):
            self.assertEqual(self.report.rows_for(split), report.rows_for(split))
        for a, b in zip(self.model.weights + self.model.biases, model.weights + model.biases):
            self.assertTrue(np.array_equal(a, b))

    def test_select_best_val(self):
        model, report = trainer.train_samples(self.samples, self.manifest, CONFIG, 5,
                                              select_best_val=True)
        val = [r.metrics.mse for r in report.rows_for('val')]
        self.assertEqual(int(np.argmin(val)) + 1, report.selected_epoch)
        self.assertEqual(self.report.rows, report.rows)
        self.assertEqual(min(val),
                         trainer.evaluate_samples(model, self.samples, self.manifest, 'val').mse)

    def test_data_model_mismatch(self):
        config = dataclasses.replace(CONFIG, layer_sizes=(99, 8, 1))
        with self.assertRaises(trainer.DataModelMismatch) as cm:
            trainer.train_samples(self.samples, self.manifest, config, 0)
        self.assertEqual(5, cm.exception.exit_code)

    def test_numerical_failure(self):
        with mock.patch.object(neuralnet, 'mse_loss', return_value=math.nan):
            with self.assertRaises(trainer.NumericalFailure) as cm:
                trainer.train_samples(self.samples, self.manifest, CONFIG, 0)
        self.assertIn('epoch 1 batch 1', str(cm.exception))
        self.assertEqual(6, cm.exception.exit_code)


class TestEvaluate(unittest.TestCase):
    """Test evaluation and prediction."""

    @classmethod
    def setUpClass(cls):
        cls.samples, cls.manifest = fixed_geometry_dataset(n_devices=20, seed=4)

    def test_oracle(self):
        for split in SPLITS:
            arrays = trainer.split_arrays(self.samples, self.manifest, split)
            metrics = trainer.evaluate_predictions(arrays.targets, arrays, self.manifest)
            self.assertEqual(0.0, metrics.mse)
            self.assertEqual(0.0, metrics.msle)
            self.assertEqual(0.0, metrics.mae)
            self.assertLess(metrics.mae_meters, 1e-18)
            self.assertLess(metrics.mape_percent_meters, 1e-9)

    def test_denormalization_inverse(self):
        for sample in self.samples:
            recovered = self.manifest.target.denormalize(sample.label_normalized)
            self.assertTrue(math.isclose(sample.label_L, recovered, rel_tol=1e-9))

    def test_predict_endpoints(self):
        curve = self.samples[0].raw_currents
        self.assertTrue(math.isclose(1e-7, trainer.predict(constant_model(0.0), curve,
                                                           self.manifest), rel_tol=1e-12))
        self.assertTrue(math.isclose(5e-6, trainer.predict(constant_model(1.0), curve,
                                                           self.manifest), rel_tol=1e-12))

    def test_predict_shape_mismatch(self):
        with self.assertRaises(neuralnet.ShapeMismatch):
            trainer.predict(constant_model(0.5), np.ones(99), self.manifest)

    def test_unknown_split(self):
        with self.assertRaises(trainer.UnknownSplit) as cm:
            trainer.evaluate_samples(constant_model(0.5), self.samples, self.manifest, 'bogus')
        self.assertEqual(5, cm.exception.exit_code)
        without_val = [s for s in self.samples if self.manifest.split_of(s) != 'val']
        with self.assertRaises(trainer.UnknownSplit):
            trainer.evaluate_samples(constant_model(0.5), without_val, self.manifest, 'val')


class TestFiles(unittest.TestCase):
    """Test training from and writing to files."""

    @classmethod
    def setUpClass(cls):
        cls.samples, cls.manifest = fixed_geometry_dataset(n_devices=20, seed=8)

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.data = os.path.join(self.tmpdir.name, 'data')
        datasetio.write_dataset(self.samples, self.manifest, self.data)

    def tearDown(self):
        self.tmpdir.cleanup()

    def test_train_from_directory(self):
        config = dataclasses.replace(CONFIG, epochs=2)
        model, report, manifest = trainer.train(self.data, config, 1)
        _, in_memory = trainer.train_samples(self.samples, self.manifest, config, 1)
        self.assertEqual(in_memory.rows, report.rows)
        self.assertEqual(report.final('train').metrics, trainer.evaluate(model, self.data,
                                                                         'train'))
        self.assertEqual(self.manifest.to_dict(), manifest.to_dict())

    def test_checkpoint(self):
        config = dataclasses.replace(CONFIG, epochs=1)
        model, report = trainer.train_samples(self.samples, self.manifest, config, 2)
        path = os.path.join(self.tmpdir.name, 'out', 'model.json')
        trainer.save_checkpoint(model, path, self.manifest, report, {'train_seed': 2})
        loaded, manifest = trainer.load_checkpoint(path)
        self.assertEqual(self.manifest.to_dict(), manifest.to_dict())
        curve = self.samples[3].raw_currents
        self.assertEqual(trainer.predict(model, curve, self.manifest),
                         trainer.predict(loaded, curve, manifest))
        self.assertEqual(report.final('test').metrics,
                         trainer.evaluate(loaded, self.data, 'test'))

    def test_report(self):
        config = dataclasses.replace(CONFIG, epochs=2)
        _, report = trainer.train_samples(self.samples, self.manifest, config, 3)
        path = os.path.join(self.tmpdir.name, 'report.csv')
        trainer.write_report(report, path, timing=False)
        with open(path, encoding='UTF-8', newline='') as f:
            rows = list(csv.reader(f))
        self.assertEqual(list(trainer.REPORT_HEADER), rows[0])
        self.assertEqual(7, len(rows))
        self.assertEqual(['1', 'train'], rows[1][:2])
        self.assertTrue(all(row[-1] == '0' for row in rows[1:]))
        self.assertEqual(report.rows[0].metrics.mse, float(rows[1][2]))

        _, again = trainer.train_samples(self.samples, self.manifest, config, 3)
        other = os.path.join(self.tmpdir.name, 'again.csv')
        trainer.write_report(again, other, timing=False)
        with open(path, 'rb') as f1, open(other, 'rb') as f2:
            self.assertEqual(f1.read(), f2.read())


if __name__ == '__main__':
    unittest.main()
