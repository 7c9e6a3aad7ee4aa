"""Dense-network candidate models.

A deliberately small engine: relu MLPs with a softmax head, trained by
plain minibatch SGD on cross-entropy under Gaussian input augmentation
(one fresh noise draw per example per epoch, addressed by the shared
noise-stream keys so training is reproducible bit for bit). Gradients are
hand-derived and checked against finite differences in the test suite.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datasets import Dataset
from .numerics import gaussian_grid

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file is malformed or has the wrong version."""


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, message: str):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass
class DenseLayer:
    weight: np.ndarray  # (in_dim, out_dim)
    bias: np.ndarray    # (out_dim,)
    activation: str     # "relu" | "identity"


@dataclass
class MlpParams:
    layers: list[DenseLayer]

    @property
    def in_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def num_classes(self) -> int:
        return self.layers[-1].weight.shape[1]

    @property
    def arch(self) -> list[int]:
        return [self.in_dim] + [layer.weight.shape[1] for layer in self.layers]


@dataclass
class TrainConfig:
    sigma: float
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 0.01
    lr_decay_epochs: list[int] = field(default_factory=list)
    lr_decay_factor: float = 0.1
    seed: int = 0


def init_mlp(arch: list[int], seed: int) -> MlpParams:
    """He-initialized MLP; hidden layers relu, final layer identity."""
    if len(arch) < 2 or any(d < 1 for d in arch):
        raise ValueError(f"arch needs >= 2 positive layer sizes, got {arch}")
    rng = np.random.default_rng(np.random.SeedSequence((seed & 0xFFFFFFFFFFFFFFFF, 0x1417)))
    layers = []
    for li, (d_in, d_out) in enumerate(zip(arch, arch[1:])):
        w = rng.standard_normal((d_in, d_out)) * math.sqrt(2.0 / d_in)
        act = "relu" if li < len(arch) - 2 else "identity"
        layers.append(DenseLayer(w, np.zeros(d_out), act))
    return MlpParams(layers)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(model: MlpParams, x: np.ndarray) -> np.ndarray:
    """Probability vector(s) for a single point (d,) or a batch (n, d).

    The induced classifier is argmax of the output, ties to the lowest
    class index.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    h = x[None, :] if squeeze else x
    if h.shape[1] != model.in_dim:
        raise ValueError(f"input dim {h.shape[1]} != model dim {model.in_dim}")
    for layer in model.layers:
        h = h @ layer.weight + layer.bias
        if layer.activation == "relu":
            h = np.maximum(h, 0.0)
    probs = _softmax(h)
    return probs[0] if squeeze else probs


def classify(model: MlpParams, x: np.ndarray) -> np.ndarray | int:
    p = forward(model, x)
    return int(np.argmax(p)) if p.ndim == 1 else np.argmax(p, axis=1)


def accuracy(model: MlpParams, ds: Dataset) -> float:
    return float(np.mean(classify(model, ds.features) == ds.labels))


def _forward_cached(model: MlpParams, x: np.ndarray):
    """Forward pass keeping pre/post-activation values for backprop."""
    acts = [x]
    pre = []
    h = x
    for layer in model.layers:
        z = h @ layer.weight + layer.bias
        pre.append(z)
        h = np.maximum(z, 0.0) if layer.activation == "relu" else z
        acts.append(h)
    return pre, acts, _softmax(acts[-1])


def cross_entropy_grads(model: MlpParams, x: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch and gradients for every layer."""
    n = x.shape[0]
    pre, acts, probs = _forward_cached(model, x)
    py = probs[np.arange(n), labels]
    loss = float(-np.mean(np.log(np.maximum(py, 1e-300))))
    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grads = []
    for li in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[li]
        gw = acts[li].T @ delta
        gb = delta.sum(axis=0)
        grads.append((gw, gb))
        if li > 0:
            delta = delta @ layer.weight.T
            if model.layers[li - 1].activation == "relu":
                delta = delta * (pre[li - 1] > 0.0)
    grads.reverse()
    return loss, grads


def _train_loop(train: Dataset, arch: list[int], cfg: TrainConfig):
    if cfg.epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {cfg.epochs}")
    if cfg.batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {cfg.batch_size}")
    if cfg.learning_rate <= 0.0:
        raise ValueError(f"learning_rate must be > 0, got {cfg.learning_rate}")
    if cfg.sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {cfg.sigma}")
    if len(train) == 0:
        raise ValueError("training set is empty")
    if arch[0] != train.dim or arch[-1] != train.num_classes:
        raise ValueError(f"arch {arch} incompatible with data ({train.dim} -> {train.num_classes})")

    model = init_mlp(arch, cfg.seed)
    n = len(train)
    points = np.arange(n, dtype=np.int64)
    lr = cfg.learning_rate
    decay_at = set(cfg.lr_decay_epochs)
    losses = []
    for epoch in range(cfg.epochs):
        if epoch in decay_at:
            lr *= cfg.lr_decay_factor
        if cfg.sigma > 0.0:
            noise = gaussian_grid(cfg.seed, points, np.full(n, epoch, dtype=np.int64),
                                  np.zeros(n, dtype=np.int64), train.dim, cfg.sigma)
            x_aug = train.features + noise
        else:
            x_aug = train.features
        order = np.random.default_rng(
            np.random.SeedSequence((cfg.seed & 0xFFFFFFFFFFFFFFFF, epoch, 0xB47C))
        ).permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads = cross_entropy_grads(model, x_aug[batch], train.labels[batch])
            if not math.isfinite(loss):
                raise TrainingDiverged(epoch, f"non-finite loss {loss}")
            epoch_loss += loss * batch.size
            for layer, (gw, gb) in zip(model.layers, grads):
                layer.weight -= lr * gw
                layer.bias -= lr * gb
        losses.append(epoch_loss / n)
    return model, losses


def train_gaussian_aug(train: Dataset, arch: list[int], cfg: TrainConfig) -> MlpParams:
    """Gaussian-data-augmentation training: minibatch SGD on the
    cross-entropy of forward(x + delta), one fresh delta per example per
    epoch keyed by (seed, example, epoch, 0). Deterministic per config."""
    model, _ = _train_loop(train, arch, cfg)
    return model


def train_with_history(train: Dataset, arch: list[int], cfg: TrainConfig
                       ) -> tuple[MlpParams, list[float]]:
    """Like train_gaussian_aug, also returning the mean loss per epoch."""
    return _train_loop(train, arch, cfg)


def _b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _from_b64(text: str, shape: tuple[int, ...], field_name: str) -> np.ndarray:
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise ModelFormatError(f"field {field_name}: invalid base64 ({exc})") from None
    expected = int(np.prod(shape)) * 8
    if len(raw) != expected:
        raise ModelFormatError(
            f"field {field_name}: expected {expected} bytes for shape {shape}, got {len(raw)}")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)


def save_model(model: MlpParams, path: str | Path) -> Path:
    path = Path(path)
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "arch": model.arch,
        "activation": "relu",
        "layers": [{"w": _b64(layer.weight), "b": _b64(layer.bias)} for layer in model.layers],
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def load_model(path: str | Path) -> MlpParams:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: format version {version!r}, this reader supports {MODEL_FORMAT_VERSION}")
    arch = doc.get("arch")
    layers_doc = doc.get("layers")
    if not isinstance(arch, list) or not isinstance(layers_doc, list) \
            or len(layers_doc) != len(arch) - 1:
        raise ModelFormatError(f"{path}: field arch/layers inconsistent")
    layers = []
    for li, (d_in, d_out) in enumerate(zip(arch, arch[1:])):
        entry = layers_doc[li]
        w = _from_b64(entry["w"], (d_in, d_out), f"layers[{li}].w")
        b = _from_b64(entry["b"], (d_out,), f"layers[{li}].b")
        act = "relu" if li < len(arch) - 2 else "identity"
        layers.append(DenseLayer(w, b, act))
    return MlpParams(layers)
