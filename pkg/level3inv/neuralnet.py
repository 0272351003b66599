"""Multi-layer perceptron regression trained by backpropagation and Adam.

Patterns are rows: a batch of inputs has shape (patterns, layer_sizes[0]). Layer l maps its
inputs o through net = o @ weights[l] + biases[l], so weights[l][i, j] is the weight from node i
of the previous layer to node j.
"""

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from level3inv import errors


# Version of the checkpoint layout written by this code
CHECKPOINT_SCHEMA_VERSION = 1

ACTIVATIONS = ('relu', 'sigmoid')


class InvalidConfig(errors.Level3InvError):
    """The network configuration can't be built."""

    exit_code = 2


class ShapeMismatch(errors.Level3InvError):
    """Array dimensions don't agree with each other or with the network."""

    exit_code = 5


@dataclass(frozen=True)
class MlpConfig:
    """Network architecture and training hyperparameters."""

    layer_sizes: tuple[int, ...] = (100, 128, 64, 32, 16, 1)
    hidden_activation: str = 'relu'
    sigmoid_k: float = 1.0  # spread of the sigmoid activation
    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 100
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    init_seed: int = 0

    def validate(self):
        """Check that the network can be built and trained.

        Raises:
            InvalidConfig: the configuration is not usable
        """
        if len(self.layer_sizes) < 2:
            raise InvalidConfig('At least an input and an output layer are needed')
        if any(size < 1 for size in self.layer_sizes):
            raise InvalidConfig(f'Layer sizes must be at least 1: {list(self.layer_sizes)}')
        if self.hidden_activation not in ACTIVATIONS:
            raise InvalidConfig(f'Unknown activation {self.hidden_activation}')
        if not self.sigmoid_k > 0:
            raise InvalidConfig(f'Sigmoid spread must be positive: {self.sigmoid_k}')
        if not self.learning_rate > 0:
            raise InvalidConfig(f'Learning rate must be positive: {self.learning_rate}')
        if self.batch_size < 1:
            raise InvalidConfig(f'Batch size must be positive: {self.batch_size}')
        if self.epochs < 0:
            raise InvalidConfig(f'Epochs must not be negative: {self.epochs}')
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1 and self.adam_epsilon > 0):
            raise InvalidConfig('Invalid Adam settings')

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d['layer_sizes'] = list(self.layer_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> 'MlpConfig':
        return cls(**{**d, 'layer_sizes': tuple(int(s) for s in d['layer_sizes'])})


@dataclass
class MlpModel:
    """Learnable state of the network."""

    config: MlpConfig
    weights: list[np.ndarray]  # weights[l] has shape (layer_sizes[l], layer_sizes[l + 1])
    biases: list[np.ndarray]   # biases[l] has shape (layer_sizes[l + 1],)

    @property
    def n_layers(self) -> int:
        return len(self.weights)


@dataclass
class ForwardCache:
    """Intermediate values of a forward pass needed by backpropagation."""

    nets: list[np.ndarray] = field(default_factory=list)     # pre-activation of each layer
    outputs: list[np.ndarray] = field(default_factory=list)  # outputs[0] is the input batch


@dataclass
class Gradients:
    """Derivatives of the loss with respect to every weight and bias."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class AdamState:
    """Moment estimates of the Adam optimizer."""

    m_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_weights: list[np.ndarray]
    v_biases: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros(cls, model: MlpModel) -> 'AdamState':
        return cls([np.zeros_like(w) for w in model.weights],
                   [np.zeros_like(b) for b in model.biases],
                   [np.zeros_like(w) for w in model.weights],
                   [np.zeros_like(b) for b in model.biases])


def relu(net: np.ndarray) -> np.ndarray:
    return np.maximum(net, 0.0)


def sigmoid(net: np.ndarray, k: float = 1.0) -> np.ndarray:
    """Logistic function 1 / (1 + exp(-k net)), evaluated without overflow."""
    return 0.5 * (1.0 + np.tanh(0.5 * (k * net)))


def activate(config: MlpConfig, net: np.ndarray) -> np.ndarray:
    if config.hidden_activation == 'sigmoid':
        return sigmoid(net, config.sigmoid_k)
    return relu(net)


def activation_derivative(config: MlpConfig, net: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Derivative of the hidden activation; the ReLU derivative at 0 is taken as 0."""
    if config.hidden_activation == 'sigmoid':
        return config.sigmoid_k * out * (1.0 - out)
    return (net > 0).astype(np.float64)


def init_model(config: MlpConfig) -> MlpModel:
    """Create a network with He-uniform weights and zero biases.

    Raises:
        InvalidConfig: the configuration is not usable
    """
    config.validate()
    rng = np.random.default_rng(config.init_seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(config.layer_sizes[:-1], config.layer_sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(config, weights, biases)


def _as_batch(model: MlpModel, inputs: np.ndarray) -> np.ndarray:
    batch = np.asarray(inputs, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[np.newaxis, :]
    if batch.ndim != 2 or batch.shape[1] != model.config.layer_sizes[0]:
        raise ShapeMismatch(f'Input of shape {batch.shape} does not fit an input layer of '
                            f'{model.config.layer_sizes[0]}')
    return batch


def forward(model: MlpModel, batch_inputs: np.ndarray, cache: bool = False):
    """Run a batch of patterns through the network.

    Hidden layers use the configured activation and the output layer is linear.

    Returns:
        predictions of shape (patterns, outputs), plus the ForwardCache if cache is set

    Raises:
        ShapeMismatch: the inputs don't fit the input layer
    """
    out = _as_batch(model, batch_inputs)
    fcache = ForwardCache(outputs=[out])
    last = model.n_layers - 1
    for layer, (w, b) in enumerate(zip(model.weights, model.biases)):
        net = out @ w + b
        out = net if layer == last else activate(model.config, net)
        if cache:
            fcache.nets.append(net)
            fcache.outputs.append(out)
    if cache:
        return out, fcache
    return out


def _check_targets(predictions: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.size != t.size:
        raise ShapeMismatch(f'{p.size} predictions but {t.size} targets')
    return p, t.reshape(p.shape)


def mse_loss(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared error over all patterns and outputs.

    Raises:
        ShapeMismatch: the number of predictions and targets differ
    """
    p, t = _check_targets(predictions, targets)
    return float(np.mean((t - p) ** 2))


def backward(model: MlpModel, cache: ForwardCache, batch_inputs: np.ndarray,
             targets: np.ndarray) -> Gradients:
    """Backpropagate the mean squared error of a cached forward pass.

    The error at the output is propagated from each layer to the one before it.

    Raises:
        ShapeMismatch: the cache, inputs and targets don't agree
    """
    batch = _as_batch(model, batch_inputs)
    if len(cache.outputs) != model.n_layers + 1 or cache.outputs[0].shape != batch.shape:
        raise ShapeMismatch('Forward cache does not match the inputs')
    predictions, t = _check_targets(cache.outputs[-1], targets)
    delta = 2.0 * (predictions - t) / predictions.size
    grad_w = [np.empty(0)] * model.n_layers
    grad_b = [np.empty(0)] * model.n_layers
    for layer in reversed(range(model.n_layers)):
        grad_w[layer] = cache.outputs[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer:
            delta = (delta @ model.weights[layer].T) * activation_derivative(
                model.config, cache.nets[layer - 1], cache.outputs[layer])
    return Gradients(grad_w, grad_b)


def adam_step(model: MlpModel, gradients: Gradients, state: AdamState,
              learning_rate: Optional[float] = None) -> tuple[MlpModel, AdamState]:
    """Apply one bias-corrected Adam update.

    Returns new model and state objects; the arguments are left unchanged.

    Raises:
        ShapeMismatch: the gradients or state don't match the model
    """
    cfg = model.config
    lr = cfg.learning_rate if learning_rate is None else learning_rate
    for arrays in (gradients.weights, state.m_weights, state.v_weights):
        if [a.shape for a in arrays] != [w.shape for w in model.weights]:
            raise ShapeMismatch('Weight gradients or optimizer state do not match the model')
    for arrays in (gradients.biases, state.m_biases, state.v_biases):
        if [a.shape for a in arrays] != [b.shape for b in model.biases]:
            raise ShapeMismatch('Bias gradients or optimizer state do not match the model')

    t = state.t + 1
    correction1 = 1.0 - cfg.adam_beta1 ** t
    correction2 = 1.0 - cfg.adam_beta2 ** t

    def update(params, grads, m_list, v_list):
        new_params, new_m, new_v = [], [], []
        for p, g, m, v in zip(params, grads, m_list, v_list):
            m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g
            v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g
            m_hat = m / correction1
            v_hat = v / correction2
            new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon))
            new_m.append(m)
            new_v.append(v)
        return new_params, new_m, new_v

    weights, m_w, v_w = update(model.weights, gradients.weights, state.m_weights,
                               state.v_weights)
    biases, m_b, v_b = update(model.biases, gradients.biases, state.m_biases, state.v_biases)
    return MlpModel(model.config, weights, biases), AdamState(m_w, m_b, v_w, v_b, t)


def model_to_dict(model: MlpModel) -> dict:
    return {
        'schema_version': CHECKPOINT_SCHEMA_VERSION,
        'config': model.config.to_dict(),
        'layers': [{'weights': w.tolist(), 'biases': b.tolist()}
                   for w, b in zip(model.weights, model.biases)],
    }


def model_from_dict(d: dict) -> MlpModel:
    """Rebuild a model from its dict form.

    Raises:
        SchemaMismatch: unsupported checkpoint version
        CorruptData: the layers don't fit the configuration
    """
    if d.get('schema_version') != CHECKPOINT_SCHEMA_VERSION:
        raise errors.SchemaMismatch(
            f'Unsupported checkpoint schema_version {d.get("schema_version")}')
    try:
        config = MlpConfig.from_dict(d['config'])
        weights = [np.array(layer['weights'], dtype=np.float64) for layer in d['layers']]
        biases = [np.array(layer['biases'], dtype=np.float64) for layer in d['layers']]
    except (KeyError, TypeError, ValueError) as e:
        raise errors.CorruptData(f'Malformed checkpoint: {e}') from e
    sizes = config.layer_sizes
    if ([w.shape for w in weights] != list(zip(sizes[:-1], sizes[1:]))
            or [b.shape for b in biases] != [(s,) for s in sizes[1:]]):
        raise errors.CorruptData('Checkpoint layers do not match its configuration')
    return MlpModel(config, weights, biases)


def save_model(model: MlpModel, path: str, extra: Optional[dict] = None):
    """Write a model checkpoint as JSON, with optional extra top-level sections.

    Raises:
        IoError: the file could not be written
    """
    d = {**(extra or {}), **model_to_dict(model)}
    try:
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        with open(path, 'w', encoding='UTF-8') as f:
            json.dump(d, f, sort_keys=True)
            f.write('\n')
    except OSError as e:
        raise errors.IoError(f'Cannot write model to {path}: {e}') from e
    logging.info(f'Wrote model checkpoint {path}')


def load_model(path: str) -> tuple[MlpModel, dict]:
    """Read a model checkpoint, returning the model and the whole decoded file.

    Raises:
        IoError: the file could not be read
        SchemaMismatch: unsupported checkpoint version
        CorruptData: the file is malformed
    """
    try:
        with open(path, encoding='UTF-8') as f:
            d = json.load(f)
    except OSError as e:
        raise errors.IoError(f'Cannot read model {path}: {e}') from e
    except json.JSONDecodeError as e:
        raise errors.CorruptData(f'Malformed model file {path}: {e}') from e
    if not isinstance(d, dict):
        raise errors.CorruptData(f'Malformed model file {path}')
    return model_from_dict(d), d
