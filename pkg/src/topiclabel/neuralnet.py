"""Dense ReLU regressor trained with mean absolute error and RMSProp.

Forward and backward passes are numpy; the RMSProp update runs through the
fused kernel in :mod:`.kernels`. Dropout is inverted and applied to hidden outputs.
"""
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError

log = logging.getLogger(__name__)

HIDDEN_SIZES = (256, 128, 64, 32)
FORMAT_VERSION = 1


@dataclass
class DenseLayer:
    weights: np.ndarray  # (fan_in, fan_out)
    biases: np.ndarray  # (fan_out,)

    @property
    def fan_in(self):
        return self.weights.shape[0]

    @property
    def fan_out(self):
        return self.weights.shape[1]


@dataclass
class MlpModel:
    layers: list
    output_bias: bool = True
    feature_config: str = None
    seed: int = None

    @property
    def input_dim(self):
        return self.layers[0].fan_in

    @property
    def sizes(self):
        return [self.input_dim] + [layer.fan_out for layer in self.layers]

    def parameters(self):
        """Flat list of parameter arrays, ``[W1, b1, W2, b2, ...]``."""
        params = []
        for layer in self.layers:
            params.extend((layer.weights, layer.biases))
        return params

    def copy(self):
        return MlpModel([DenseLayer(l.weights.copy(), l.biases.copy()) for l in self.layers],
                        self.output_bias, self.feature_config, self.seed)


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 16
    dropout_rate: float = 0.2
    learning_rate: float = 1e-3
    rmsprop_decay: float = 0.9
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.dropout_rate < 1:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValueError("learning_rate and epsilon must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class RmsPropState:
    square_avg: list = field(default_factory=list)

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params])


def init_model(input_dim, seed, hidden_sizes=HIDDEN_SIZES, output_bias=True):
    """He-initialised weights (std sqrt(2 / fan_in)) and zero biases."""
    if input_dim <= 0:
        raise ValueError(f"input_dim must be positive, got {input_dim}")
    rng = np.random.default_rng(seed)
    sizes = [int(input_dim), *hidden_sizes, 1]
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        layers.append(DenseLayer(w, np.zeros(fan_out)))
    return MlpModel(layers, output_bias=output_bias, seed=seed)


def relu(x):
    return np.maximum(x, 0.0)


def apply_dropout(activations, rate, rng, training=True):
    """Inverted dropout.

    Returns the masked activations and the multiplier mask, whose entries are
    0 for dropped units and ``1 / (1 - rate)`` for kept ones. In inference
    mode the input is returned unchanged with a mask of ones.
    """
    if not 0 <= rate < 1:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    activations = np.asarray(activations, dtype=np.float64)
    if not training or rate == 0:
        return activations, np.ones_like(activations)
    mask = (rng.random(activations.shape) >= rate) / (1.0 - rate)
    return activations * mask, mask


@dataclass
class ForwardCache:
    inputs: list  # input to each layer (post-dropout for hidden outputs)
    pre_activations: list  # pre-ReLU values for hidden layers
    masks: list  # dropout multiplier per hidden layer, None when disabled
    prediction: np.ndarray
    batched: bool


def forward(model, x, dropout=None):
    """Forward pass. ``x`` is one input vector or an ``(n, d)`` batch.

    ``dropout`` is ``None`` or ``(rate, rng)``. Returns ``(prediction, cache)``
    with a scalar prediction for a single vector and an ``(n,)`` array for a
    batch.
    """
    x = getattr(x, "values", x)
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 2
    h = x if batched else x[None, :]
    if h.shape[1] != model.input_dim:
        raise DimensionError(f"input has {h.shape[1]} features, model expects {model.input_dim}")
    inputs, pre, masks = [], [], []
    last = len(model.layers) - 1
    for i, layer in enumerate(model.layers):
        inputs.append(h)
        z = h @ layer.weights
        if i < last or model.output_bias:
            z += layer.biases
        if i == last:
            h = z
            break
        pre.append(z)
        h = relu(z)
        if dropout is not None:
            rate, rng = dropout
            h, mask = apply_dropout(h, rate, rng, training=True)
            masks.append(mask)
        else:
            masks.append(None)
    pred = h[:, 0]
    cache = ForwardCache(inputs, pre, masks, pred, batched)
    return (pred if batched else float(pred[0])), cache


def mae_loss(predictions, targets):
    p = np.atleast_1d(np.asarray(predictions, dtype=np.float64))
    t = np.atleast_1d(np.asarray(targets, dtype=np.float64))
    if p.shape != t.shape or p.size == 0:
        raise ValueError(f"predictions {p.shape} and targets {t.shape} must be equal and nonempty")
    return float(np.mean(np.abs(p - t)))


def backward(model, cache, target):
    """Gradients of the mean absolute error w.r.t. every parameter.

    Returns a list aligned with :meth:`MlpModel.parameters`. For a batch the
    loss is the batch mean. The subgradient at zero error and at the ReLU kink
    is 0.
    """
    if cache is None or not isinstance(cache, ForwardCache):
        raise ValueError("backward requires the cache returned by forward")
    pred = cache.prediction
    target = np.broadcast_to(np.asarray(target, dtype=np.float64), pred.shape)
    n = pred.shape[0]
    delta = (np.sign(pred - target) / n)[:, None]
    grads = [None] * (2 * len(model.layers))
    last = len(model.layers) - 1
    for i in range(last, -1, -1):
        layer = model.layers[i]
        grads[2 * i] = cache.inputs[i].T @ delta
        if i == last and not model.output_bias:
            grads[2 * i + 1] = np.zeros_like(layer.biases)
        else:
            grads[2 * i + 1] = delta.sum(axis=0)
        if i == 0:
            break
        delta = delta @ layer.weights.T
        mask = cache.masks[i - 1]
        if mask is not None:
            delta = delta * mask
        delta = delta * (cache.pre_activations[i - 1] > 0)
    return grads


def rmsprop_step(params, grads, state, learning_rate=1e-3, decay=0.9, epsilon=1e-8):
    """One RMSProp update, in place on ``params`` and ``state``.

    ``state = decay*state + (1-decay)*grad**2``;
    ``param -= learning_rate * grad / sqrt(state + epsilon)``.
    """
    if not (len(params) == len(grads) == len(state.square_avg)):
        raise ValueError("params, grads and state must have the same length")
    for p, g, s in zip(params, grads, state.square_avg):
        if p.shape != g.shape or p.shape != s.shape:
            raise DimensionError(f"shape mismatch: param {p.shape}, grad {g.shape}, state {s.shape}")
        kernels.rmsprop_update(p, g, s, learning_rate, decay, epsilon)
    return params, state


def train(model, inputs, targets, config):
    """Mini-batch RMSProp training on ``(inputs, targets)``.

    Examples are reshuffled every epoch with a generator seeded from
    ``config.seed``; the last partial batch is kept. Returns the model
    (trained in place) and the per-epoch mean training loss.
    """
    X = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("train needs a nonempty (n, d) input matrix")
    if y.shape != (X.shape[0],):
        raise ValueError(f"targets shape {y.shape} does not match {X.shape[0]} inputs")
    if X.shape[1] != model.input_dim:
        raise DimensionError(f"inputs have {X.shape[1]} features, model expects {model.input_dim}")
    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    state = RmsPropState.zeros_like(params)
    dropout = (config.dropout_rate, rng) if config.dropout_rate > 0 else None
    n = X.shape[0]
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            pred, cache = forward(model, X[idx], dropout=dropout)
            total += np.abs(pred - y[idx]).sum()
            grads = backward(model, cache, y[idx])
            rmsprop_step(params, grads, state, config.learning_rate,
                         config.rmsprop_decay, config.epsilon)
        history.append(total / n)
        log.debug("epoch %d loss %.6f", epoch + 1, history[-1])
    return model, history


def predict(model, x):
    """Score without dropout; scalar for one vector, array for a batch."""
    return forward(model, x)[0]


def predict_batch(model, X, chunk_size=1024):
    """Score an ``(n, d)`` matrix in fixed-size chunks (cost linear in n)."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], chunk_size):
        out[start:start + chunk_size] = forward(model, X[start:start + chunk_size])[0]
    return out


def save_model(model, path):
    meta = {
        "format_version": FORMAT_VERSION,
        "sizes": model.sizes,
        "output_bias": model.output_bias,
        "feature_config": model.feature_config,
        "seed": model.seed,
    }
    arrays = {}
    for i, layer in enumerate(model.layers):
        arrays[f"W{i}"] = layer.weights
        arrays[f"b{i}"] = layer.biases
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)


def load_model(path):
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format_version") != FORMAT_VERSION:
            raise ConfigError(f"{path}: unsupported model format version {meta.get('format_version')}")
        n_layers = len(meta["sizes"]) - 1
        layers = [DenseLayer(data[f"W{i}"].astype(np.float64), data[f"b{i}"].astype(np.float64))
                  for i in range(n_layers)]
    return MlpModel(layers, meta["output_bias"], meta["feature_config"], meta["seed"])
