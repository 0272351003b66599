"""Test neuralnet."""

import math
import os
import tempfile
import unittest

import numpy as np

from .context import level3inv  # noqa: F401

from level3inv import errors  # noqa: I100
from level3inv import neuralnet
from level3inv.neuralnet import MlpConfig, MlpModel


def hand_model(weights, biases, activation='relu', k=1.0) -> MlpModel:
    weights = [np.array(w, dtype=np.float64) for w in weights]
    biases = [np.array(b, dtype=np.float64) for b in biases]
    sizes = (weights[0].shape[0],) + tuple(w.shape[1] for w in weights)
    return MlpModel(MlpConfig(layer_sizes=sizes, hidden_activation=activation, sigmoid_k=k),
                    weights, biases)


def numerical_gradients(model: MlpModel, inputs: np.ndarray, targets: np.ndarray,
                        h: float = 1e-6) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Central finite differences of the loss with respect to every parameter."""
    def loss():
        return neuralnet.mse_loss(neuralnet.forward(model, inputs), targets)

    def differentiate(arrays):
        grads = []
        for a in arrays:
            g = np.zeros_like(a)
            for index in np.ndindex(a.shape):
                saved = a[index]
                a[index] = saved + h
                up = loss()
                a[index] = saved - h
                down = loss()
                a[index] = saved
                g[index] = (up - down) / (2 * h)
            grads.append(g)
        return grads
    return differentiate(model.weights), differentiate(model.biases)


class TestConfig(unittest.TestCase):
    """Test MlpConfig and init_model."""

    def test_defaults(self):
        config = MlpConfig()
        self.assertEqual((100, 128, 64, 32, 16, 1), config.layer_sizes)
        self.assertEqual(6, len(config.layer_sizes))
        self.assertEqual(1e-4, config.learning_rate)
        self.assertEqual(32, config.batch_size)
        self.assertEqual(100, config.epochs)

    def test_init_shapes(self):
        model = neuralnet.init_model(MlpConfig())
        self.assertEqual(5, model.n_layers)
        self.assertEqual([(100, 128), (128, 64), (64, 32), (32, 16), (16, 1)],
                         [w.shape for w in model.weights])
        for b in model.biases:
            self.assertTrue(np.all(b == 0))

    def test_init_deterministic(self):
        a = neuralnet.init_model(MlpConfig(init_seed=3))
        b = neuralnet.init_model(MlpConfig(init_seed=3))
        c = neuralnet.init_model(MlpConfig(init_seed=4))
        for wa, wb, wc in zip(a.weights, b.weights, c.weights):
            self.assertTrue(np.array_equal(wa, wb))
            self.assertFalse(np.array_equal(wa, wc))

    def test_init_bounds(self):
        model = neuralnet.init_model(MlpConfig(layer_sizes=(6, 50, 1)))
        self.assertTrue(np.all(np.abs(model.weights[0]) <= 1.0))
        limit = math.sqrt(6.0 / 50)
        self.assertTrue(np.all(np.abs(model.weights[1]) <= limit))

    def test_invalid(self):
        for name, config in [
                ('zero layer', MlpConfig(layer_sizes=(4, 0, 1))),
                ('one layer', MlpConfig(layer_sizes=(4,))),
                ('activation', MlpConfig(hidden_activation='tanh')),
                ('learning rate', MlpConfig(learning_rate=0.0)),
                ('batch size', MlpConfig(batch_size=0)),
                ('sigmoid', MlpConfig(sigmoid_k=-1.0))]:
            with self.subTest(name=name):
                with self.assertRaises(neuralnet.InvalidConfig) as cm:
                    neuralnet.init_model(config)
                self.assertEqual(2, cm.exception.exit_code)


class TestForward(unittest.TestCase):
    """Test forward and the activations."""

    def test_zero_model(self):
        model = neuralnet.init_model(MlpConfig(layer_sizes=(5, 4, 1)))
        model.weights = [np.zeros_like(w) for w in model.weights]
        out = neuralnet.forward(model, np.random.default_rng(0).normal(size=(7, 5)))
        self.assertTrue(np.array_equal(np.zeros((7, 1)), out))

    def test_hand_relu(self):
        model = hand_model([[[2.0]], [[3.0]]], [[-1.0], [0.0]])
        self.assertEqual(3.0, neuralnet.forward(model, [1.0])[0, 0])
        self.assertEqual(0.0, neuralnet.forward(model, [0.0])[0, 0])

    def test_sigmoid(self):
        for k in (0.1, 1.0, 7.0):
            self.assertEqual(0.5, neuralnet.sigmoid(np.array(0.0), k))
        net = np.linspace(-30.0, 30.0, 61)
        for k in (0.5, 2.0):
            self.assertTrue(np.array_equal(neuralnet.sigmoid(k * net, 1.0),
                                           neuralnet.sigmoid(net, k)))
        self.assertTrue(np.allclose(1.0 / (1.0 + np.exp(-net)), neuralnet.sigmoid(net),
                                    rtol=1e-14, atol=1e-15))
        self.assertTrue(np.all(np.isfinite(neuralnet.sigmoid(np.array([-1e6, 1e6])))))

    def test_single_sigmoid_unit(self):
        model = hand_model([[[1.0]], [[1.0]]], [[0.0], [0.0]], activation='sigmoid')
        self.assertEqual(0.5, neuralnet.forward(model, [0.0])[0, 0])

    def test_cache(self):
        model = neuralnet.init_model(MlpConfig(layer_sizes=(4, 3, 2, 1), init_seed=1))
        inputs = np.random.default_rng(1).normal(size=(6, 4))
        out, cache = neuralnet.forward(model, inputs, cache=True)
        self.assertEqual(3, len(cache.nets))
        self.assertEqual(4, len(cache.outputs))
        self.assertTrue(np.array_equal(inputs, cache.outputs[0]))
        for net, output in zip(cache.nets[:-1], cache.outputs[1:-1]):
            self.assertTrue(np.array_equal(np.maximum(net, 0.0), output))
        self.assertTrue(np.array_equal(out, cache.outputs[-1]))
        self.assertTrue(np.array_equal(out, neuralnet.forward(model, inputs)))

    def test_shape_mismatch(self):
        model = neuralnet.init_model(MlpConfig(layer_sizes=(4, 3, 1)))
        with self.assertRaises(neuralnet.ShapeMismatch) as cm:
            neuralnet.forward(model, np.zeros((2, 5)))
        self.assertEqual(5, cm.exception.exit_code)


class TestLoss(unittest.TestCase):
    """Test mse_loss."""

    def test_values(self):
        self.assertEqual(0.0, neuralnet.mse_loss([1.5, 2.0], [1.5, 2.0]))
        self.assertEqual(4.0, neuralnet.mse_loss([0.0], [2.0]))
        self.assertEqual(2.0, neuralnet.mse_loss([1.0, 3.0], [1.0, 1.0]))
        with self.assertRaises(neuralnet.ShapeMismatch):
            neuralnet.mse_loss([1.0, 2.0], [1.0])


class TestBackward(unittest.TestCase):
    """Test backward."""

    def test_hand_chain_rule(self):
        model = hand_model([[[1.0]]], [[0.0]])
        out, cache = neuralnet.forward(model, [2.0], cache=True)
        self.assertEqual(4.0, neuralnet.mse_loss(out, [0.0]))
        gradients = neuralnet.backward(model, cache, [2.0], [0.0])
        self.assertEqual(8.0, gradients.weights[0][0, 0])
        self.assertEqual(4.0, gradients.biases[0][0])

    def test_zero_error(self):
        model = neuralnet.init_model(MlpConfig(layer_sizes=(3, 4, 1), init_seed=2))
        inputs = np.random.default_rng(2).normal(size=(5, 3))
        out, cache = neuralnet.forward(model, inputs, cache=True)
        gradients = neuralnet.backward(model, cache, inputs, out)
        for g in gradients.weights + gradients.biases:
            self.assertTrue(np.all(g == 0))

    def test_finite_differences(self):
        rng = np.random.default_rng(12)
        for trial in range(100):
            activation = 'relu' if trial % 2 else 'sigmoid'
            n_layers = int(rng.integers(1, 4))
            sizes = tuple(int(s) for s in rng.integers(1, 9, size=n_layers)) + (1,)
            config = MlpConfig(layer_sizes=sizes, hidden_activation=activation,
                               sigmoid_k=float(rng.uniform(0.5, 2.0)), init_seed=trial)
            model = neuralnet.init_model(config)
            model.biases = [rng.normal(scale=0.1, size=b.shape) for b in model.biases]
            inputs = rng.normal(size=(6, sizes[0]))
            targets = rng.normal(size=(6, 1))
            _, cache = neuralnet.forward(model, inputs, cache=True)
            gradients = neuralnet.backward(model, cache, inputs, targets)
            numeric_w, numeric_b = numerical_gradients(model, inputs, targets)
            with self.subTest(trial=trial, sizes=sizes, activation=activation):
                for analytic, numeric in zip(gradients.weights + gradients.biases,
                                             numeric_w + numeric_b):
                    self.assertTrue(np.allclose(numeric, analytic, rtol=1e-5, atol=1e-7),
                                    f'{analytic} != {numeric}')

    def test_permutation_invariance(self):
        model = neuralnet.init_model(MlpConfig(layer_sizes=(5, 8, 4, 1), init_seed=9))
        rng = np.random.default_rng(9)
        inputs = rng.normal(size=(32, 5))
        targets = rng.normal(size=(32, 1))
        _, cache = neuralnet.forward(model, inputs, cache=True)
        base = neuralnet.backward(model, cache, inputs, targets)
        order = rng.permutation(32)
        _, cache = neuralnet.forward(model, inputs[order], cache=True)
        shuffled = neuralnet.backward(model, cache, inputs[order], targets[order])
        for a, b in zip(base.weights + base.biases, shuffled.weights + shuffled.biases):
            self.assertTrue(np.allclose(a, b, rtol=1e-12, atol=1e-15))


class TestAdam(unittest.TestCase):
    """Test adam_step."""

    def constant_gradients(self, model: MlpModel, g: float) -> neuralnet.Gradients:
        return neuralnet.Gradients([np.full_like(w, g) for w in model.weights],
                                   [np.full_like(b, g) for b in model.biases])

    def test_zero_gradient(self):
        model = neuralnet.init_model(MlpConfig(layer_sizes=(3, 2, 1)))
        state = neuralnet.AdamState.zeros(model)
        new_model, new_state = neuralnet.adam_step(model, self.constant_gradients(model, 0.0),
                                                   state)
        for a, b in zip(model.weights + model.biases, new_model.weights + new_model.biases):
            self.assertTrue(np.array_equal(a, b))
        self.assertEqual(1, new_state.t)
        self.assertEqual(0, state.t)

    def test_first_step(self):
        lr = 1e-4
        model = neuralnet.init_model(MlpConfig(layer_sizes=(3, 2, 1), learning_rate=lr))
        state = neuralnet.AdamState.zeros(model)
        for g in (5.0, 1.0, 1e6):
            with self.subTest(g=g):
                new_model, _ = neuralnet.adam_step(model, self.constant_gradients(model, g),
                                                   state)
                for a, b in zip(model.weights, new_model.weights):
                    delta = np.abs(b - a)
                    self.assertTrue(np.all(delta >= 0.99999 * lr))
                    self.assertTrue(np.all(delta <= lr * (1 + 1e-9)))
        # Tiny gradients move by lr |g| / (|g| + eps)
        g = 1e-6
        new_model, _ = neuralnet.adam_step(model, self.constant_gradients(model, g), state)
        expected = lr * g / (g + model.config.adam_epsilon)
        self.assertTrue(np.allclose(expected, np.abs(new_model.weights[0] - model.weights[0]),
                                    rtol=1e-6))

    def test_two_step_trace(self):
        lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8
        model = hand_model([[[0.5]]], [[0.25]])
        model = MlpModel(MlpConfig(layer_sizes=(1, 1), learning_rate=lr), model.weights,
                         model.biases)
        state = neuralnet.AdamState.zeros(model)
        w, m, v = 0.5, 0.0, 0.0
        for t, g in enumerate((2.0, -1.0), start=1):
            gradients = neuralnet.Gradients([np.array([[g]])], [np.array([g])])
            model, state = neuralnet.adam_step(model, gradients, state)
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            w = w - lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
        self.assertAlmostEqual(w, model.weights[0][0, 0], places=15)
        self.assertEqual(2, state.t)
        self.assertTrue(all(np.all(v >= 0) for v in state.v_weights + state.v_biases))

    def test_shape_mismatch(self):
        model = neuralnet.init_model(MlpConfig(layer_sizes=(3, 2, 1)))
        other = neuralnet.init_model(MlpConfig(layer_sizes=(3, 4, 1)))
        with self.assertRaises(neuralnet.ShapeMismatch):
            neuralnet.adam_step(model, self.constant_gradients(other, 1.0),
                                neuralnet.AdamState.zeros(model))

    def test_loss_descent(self):
        rng = np.random.default_rng(31)
        inputs = rng.normal(size=(32, 4))
        targets = (inputs @ np.array([0.5, -1.0, 0.25, 2.0]))[:, np.newaxis] + 0.3
        model = neuralnet.init_model(MlpConfig(layer_sizes=(4, 16, 8, 1), learning_rate=1e-2,
                                               init_seed=31))
        state = neuralnet.AdamState.zeros(model)
        initial = neuralnet.mse_loss(neuralnet.forward(model, inputs), targets)
        for _ in range(200):
            _, cache = neuralnet.forward(model, inputs, cache=True)
            model, state = neuralnet.adam_step(
                model, neuralnet.backward(model, cache, inputs, targets), state)
        final = neuralnet.mse_loss(neuralnet.forward(model, inputs), targets)
        self.assertLessEqual(final, initial / 10)


class TestCheckpoint(unittest.TestCase):
    """Test saving and loading models."""

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmpdir.name, 'model.json')

    def tearDown(self):
        self.tmpdir.cleanup()

    def test_round_trip(self):
        model = neuralnet.init_model(MlpConfig(layer_sizes=(10, 7, 3, 1),
                                               hidden_activation='sigmoid', sigmoid_k=1.5,
                                               init_seed=8))
        model.biases = [np.full_like(b, 0.1) for b in model.biases]
        neuralnet.save_model(model, self.path, {'note': 'extra'})
        loaded, d = neuralnet.load_model(self.path)
        self.assertEqual('extra', d['note'])
        self.assertEqual(model.config, loaded.config)
        inputs = np.random.default_rng(8).normal(size=(20, 10))
        self.assertTrue(np.array_equal(neuralnet.forward(model, inputs),
                                       neuralnet.forward(loaded, inputs)))

    def test_schema_mismatch(self):
        d = neuralnet.model_to_dict(neuralnet.init_model(MlpConfig(layer_sizes=(2, 1))))
        d['schema_version'] = 999
        with self.assertRaises(errors.SchemaMismatch):
            neuralnet.model_from_dict(d)

    def test_corrupt(self):
        d = neuralnet.model_to_dict(neuralnet.init_model(MlpConfig(layer_sizes=(2, 3, 1))))
        d['layers'][0]['weights'] = [[1.0]]
        with self.assertRaises(errors.CorruptData):
            neuralnet.model_from_dict(d)
        with open(self.path, 'w', encoding='UTF-8') as f:
            f.write('{not json')
        with self.assertRaises(errors.CorruptData):
            neuralnet.load_model(self.path)

    def test_missing(self):
        with self.assertRaises(errors.IoError):
            neuralnet.load_model(self.path)


if __name__ == '__main__':
    unittest.main()
