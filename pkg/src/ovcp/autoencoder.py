"""From-scratch feed-forward stacked autoencoder trained with mini-batch SGD.

Each layer computes activation(x @ W + b). Hidden layers use ReLU; the final
reconstruction layer is linear so that negative inputs (sentiment values)
remain reconstructable. Loss is the mean squared reconstruction error.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, TrainingError, UsageError

log = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "linear")

# Relative epoch-loss improvement below this counts toward the early-stop
# plateau patience.
_MIN_RELATIVE_IMPROVEMENT = 1e-4


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: str

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise UsageError("layer dimensions must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise UsageError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    early_stop_patience: int = 20

    def __post_init__(self):
        if self.epochs < 1:
            raise UsageError("epochs must be >= 1")
        if self.batch_size < 1:
            raise UsageError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise UsageError("learning_rate must be positive")
        if self.early_stop_patience < 0:
            raise UsageError("early_stop_patience must be >= 0")


@dataclass
class Layer:
    weights: np.ndarray  # (input_dim, output_dim)
    bias: np.ndarray     # (output_dim,)
    activation: str


@dataclass
class AutoencoderModel:
    layers: list[Layer]
    encoder_depth: int
    seed: int = 0
    train_config: TrainConfig | None = None
    train_loss: list[float] = field(default_factory=list)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.layers[self.encoder_depth - 1].weights.shape[1]

    def layer_sizes(self) -> list[int]:
        sizes = [self.input_dim]
        sizes.extend(layer.weights.shape[1] for layer in self.layers)
        return sizes


def specs_from_sizes(layer_sizes) -> list[LayerSpec]:
    """Layer specs for a size chain like [500, 256, 64, 16, 64, 256, 500]."""
    sizes = list(layer_sizes)
    if len(sizes) < 3:
        raise UsageError("need at least input, latent and output sizes")
    if sizes[0] != sizes[-1]:
        raise UsageError("first and last sizes must match for reconstruction")
    specs = []
    for i in range(len(sizes) - 1):
        activation = "linear" if i == len(sizes) - 2 else "relu"
        specs.append(LayerSpec(sizes[i], sizes[i + 1], activation))
    return specs


def init_model(layer_sizes, seed: int = 0) -> AutoencoderModel:
    """Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases."""
    specs = specs_from_sizes(layer_sizes)
    rng = np.random.default_rng(seed)
    layers = []
    for spec in specs:
        limit = np.sqrt(6.0 / (spec.input_dim + spec.output_dim))
        weights = rng.uniform(-limit, limit, size=(spec.input_dim, spec.output_dim))
        layers.append(Layer(weights=weights, bias=np.zeros(spec.output_dim),
                            activation=spec.activation))
    return AutoencoderModel(layers=layers, encoder_depth=len(layers) // 2, seed=seed)


def _apply(activation: str, z: np.ndarray) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    return z


def _forward_cached(model: AutoencoderModel, x: np.ndarray):
    """Forward pass keeping pre-activations for backprop; x is (batch, dim)."""
    activations = [x]
    pre = []
    out = x
    for layer in model.layers:
        z = out @ layer.weights + layer.bias
        pre.append(z)
        out = _apply(layer.activation, z)
        activations.append(out)
    return activations, pre


def _backward(model: AutoencoderModel, activations, pre, target: np.ndarray):
    """Gradients of mean squared error w.r.t. every weight and bias."""
    batch, out_dim = activations[-1].shape
    delta = 2.0 * (activations[-1] - target) / (batch * out_dim)
    grads = []
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        if layer.activation == "relu":
            delta = delta * (pre[i] > 0)
        grad_w = activations[i].T @ delta
        grad_b = delta.sum(axis=0)
        grads.append((grad_w, grad_b))
        if i > 0:
            delta = delta @ layer.weights.T
    grads.reverse()
    return grads


def reconstruct(model: AutoencoderModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.shape[1] != model.input_dim:
        raise DataError(f"input dim {batch.shape[1]} != model dim {model.input_dim}")
    out, _ = _forward_cached(model, batch)
    return out[-1][0] if single else out[-1]


def encode(model: AutoencoderModel, x: np.ndarray) -> np.ndarray:
    """Forward pass through the encoder half only."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    out = x[None, :] if single else x
    if out.shape[1] != model.input_dim:
        raise DataError(f"input dim {out.shape[1]} != model dim {model.input_dim}")
    for layer in model.layers[:model.encoder_depth]:
        out = _apply(layer.activation, out @ layer.weights + layer.bias)
    return out[0] if single else out


def train_autoencoder(data, layer_sizes, config: TrainConfig | None = None) -> AutoencoderModel:
    """Fit the size chain on `data` (n samples x input dim) with seeded SGD."""
    config = config or TrainConfig()
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DataError("training data must be a non-empty 2-D array")
    if X.shape[1] != layer_sizes[0]:
        raise DataError(f"data dim {X.shape[1]} != first layer dim {layer_sizes[0]}")
    if not np.isfinite(X).all():
        raise DataError("training data contains non-finite values")

    model = init_model(layer_sizes, seed=config.seed)
    model.train_config = config
    rng = np.random.default_rng(config.seed)
    n = X.shape[0]

    best = np.inf
    stall = 0
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = X[perm[start:start + config.batch_size]]
            activations, pre = _forward_cached(model, batch)
            diff = activations[-1] - batch
            loss = float(np.mean(diff * diff))
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite training loss at epoch {epoch} "
                    f"(lr={config.learning_rate}); lower the learning rate")
            total += loss * batch.shape[0]
            grads = _backward(model, activations, pre, batch)
            for layer, (gw, gb) in zip(model.layers, grads):
                layer.weights -= config.learning_rate * gw
                layer.bias -= config.learning_rate * gb
        epoch_loss = total / n
        model.train_loss.append(epoch_loss)

        if config.early_stop_patience:
            if epoch_loss < best * (1.0 - _MIN_RELATIVE_IMPROVEMENT):
                best = epoch_loss
                stall = 0
            else:
                stall += 1
                if stall >= config.early_stop_patience:
                    log.debug("early stop at epoch %d (loss %.3e)", epoch, epoch_loss)
                    break
    return model


def gradient_check(model: AutoencoderModel, sample, epsilon: float,
                   max_params: int = 120, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    Checks a random subset of at least min(total, `max_params`) parameters
    on the self-reconstruction loss of `sample`.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise UsageError(f"epsilon must be in [1e-7, 1e-3], got {epsilon}")
    x = np.asarray(sample, dtype=np.float64)[None, :]
    if x.shape[1] != model.input_dim:
        raise DataError(f"sample dim {x.shape[1]} != model dim {model.input_dim}")

    activations, pre = _forward_cached(model, x)
    analytic = _backward(model, activations, pre, x)

    def loss() -> float:
        out, _ = _forward_cached(model, x)
        diff = out[-1] - x
        return float(np.mean(diff * diff))

    flat_params = []
    for li, layer in enumerate(model.layers):
        flat_params.extend(("w", li, i) for i in range(layer.weights.size))
        flat_params.extend(("b", li, i) for i in range(layer.bias.size))
    rng = np.random.default_rng(seed)
    count = min(len(flat_params), max_params)
    chosen = rng.choice(len(flat_params), size=count, replace=False)

    worst = 0.0
    for idx in chosen:
        kind, li, flat_idx = flat_params[int(idx)]
        array = model.layers[li].weights if kind == "w" else model.layers[li].bias
        grad = analytic[li][0] if kind == "w" else analytic[li][1]
        original = array.flat[flat_idx]
        array.flat[flat_idx] = original + epsilon
        up = loss()
        array.flat[flat_idx] = original - epsilon
        down = loss()
        array.flat[flat_idx] = original
        fd = (up - down) / (2.0 * epsilon)
        ga = grad.flat[flat_idx]
        rel = abs(ga - fd) / max(abs(ga), abs(fd), 1e-8)
        worst = max(worst, rel)
    return worst


def min_relu_margin(model: AutoencoderModel, sample) -> float:
    """Smallest |pre-activation| over the ReLU layers; 0 means at a kink."""
    x = np.asarray(sample, dtype=np.float64)[None, :]
    _, pre = _forward_cached(model, x)
    margins = [np.abs(z).min() for z, layer in zip(pre, model.layers)
               if layer.activation == "relu"]
    return float(min(margins)) if margins else np.inf


def concat_latents(latent_a, latent_b) -> np.ndarray:
    a = np.asarray(latent_a, dtype=np.float64).reshape(-1)
    b = np.asarray(latent_b, dtype=np.float64).reshape(-1)
    return np.concatenate([a, b])


# --------------------------------------------------------------------------
# Model files

def save_model(model: AutoencoderModel, path) -> None:
    obj = {
        "format": "ovcp-autoencoder",
        "version": 1,
        "layer_sizes": model.layer_sizes(),
        "activations": [layer.activation for layer in model.layers],
        "encoder_depth": model.encoder_depth,
        "seed": model.seed,
        "train_config": None if model.train_config is None else {
            "epochs": model.train_config.epochs,
            "batch_size": model.train_config.batch_size,
            "learning_rate": model.train_config.learning_rate,
            "seed": model.train_config.seed,
            "early_stop_patience": model.train_config.early_stop_patience,
        },
        "train_loss": model.train_loss,
        "weights": [layer.weights.tolist() for layer in model.layers],
        "biases": [layer.bias.tolist() for layer in model.layers],
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True), encoding="utf-8")


def load_model(path) -> AutoencoderModel:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"autoencoder model file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt autoencoder model file {path}: {exc}") from None
    if obj.get("format") != "ovcp-autoencoder":
        raise DataError(f"{path} is not an autoencoder model file")
    layers = [
        Layer(weights=np.array(w, dtype=np.float64),
              bias=np.array(b, dtype=np.float64),
              activation=act)
        for w, b, act in zip(obj["weights"], obj["biases"], obj["activations"])
    ]
    cfg = obj.get("train_config")
    model = AutoencoderModel(
        layers=layers,
        encoder_depth=obj["encoder_depth"],
        seed=obj.get("seed", 0),
        train_config=TrainConfig(**cfg) if cfg else None,
        train_loss=list(obj.get("train_loss", [])),
    )
    return model
