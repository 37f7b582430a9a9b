"""Small ReLU network for histogram classification, in plain numpy.

Architecture is fixed at one hidden ReLU layer and four output logits
(class 0 = "not this anomaly", classes 1..3 = urgency).  The predicted class
is the argmax of the logits with ties broken toward the lowest index, and
training is plain minibatch SGD on softmax cross-entropy with optional L2 on
the weight matrices (not the biases).

Models serialise to JSON.  Weights are stored row-major as nested lists with
``repr`` float fidelity, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_TAG = "rwanom-mlp-v1"


class ModelError(ValueError):
    """Malformed model parameters or files."""


@dataclass(frozen=True)
class MlpModel:
    """Weights for input -> hidden ReLU -> 4 logits.

    ``w1`` has shape (hidden, inputs) and ``w2`` (4, hidden); biases match.
    ``class_names`` documents the meaning of each logit and ``bin_edges``
    records the histogram geometry the network was trained on (length
    inputs + 1), so a model cannot silently be applied to the wrong bins.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    class_names: tuple[str, ...]
    bin_edges: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        w1 = np.asarray(self.w1, dtype=float)
        b1 = np.asarray(self.b1, dtype=float)
        w2 = np.asarray(self.w2, dtype=float)
        b2 = np.asarray(self.b2, dtype=float)
        edges = np.asarray(self.bin_edges, dtype=float)
        for name, arr in (("w1", w1), ("b1", b1), ("w2", w2), ("b2", b2),
                          ("bin_edges", edges)):
            if not np.isfinite(arr).all():
                raise ModelError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)
        if w1.ndim != 2 or w2.ndim != 2:
            raise ModelError("weight matrices must be two-dimensional")
        if b1.shape != (w1.shape[0],) or b2.shape != (w2.shape[0],):
            raise ModelError("bias shapes do not match the weights")
        if w2.shape[1] != w1.shape[0]:
            raise ModelError("layer shapes are incompatible")
        if len(self.class_names) != w2.shape[0]:
            raise ModelError("need one class name per output")
        if edges.shape != (w1.shape[1] + 1,):
            raise ModelError("bin_edges must have input_dim + 1 entries")

    @property
    def input_dim(self) -> int:
        return int(self.w1.shape[1])

    @property
    def hidden_dim(self) -> int:
        return int(self.w1.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.w2.shape[0])


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Logits for a single input vector (shape: input_dim)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.input_dim,):
        raise ModelError(f"input must have shape ({model.input_dim},)")
    z = model.w1 @ x + model.b1
    return model.w2 @ np.maximum(z, 0.0) + model.b2


def forward_batch(model: MlpModel, xs: np.ndarray) -> np.ndarray:
    """Logits for a batch (n, input_dim) -> (n, n_classes)."""
    xs = np.asarray(xs, dtype=float)
    z = xs @ model.w1.T + model.b1
    return np.maximum(z, 0.0) @ model.w2.T + model.b2


def classify(model: MlpModel, x: np.ndarray) -> int:
    """Predicted class index; ties break toward the lowest index."""
    return int(np.argmax(forward(model, x)))


def classify_batch(model: MlpModel, xs: np.ndarray) -> np.ndarray:
    return np.argmax(forward_batch(model, xs), axis=1)


@dataclass(frozen=True)
class TrainConfig:
    hidden_dim: int = 10
    learning_rate: float = 0.3
    epochs: int = 300
    batch_size: int = 32
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden_dim < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ModelError("hidden_dim, epochs, batch_size must be >= 1")
        if self.learning_rate <= 0 or self.l2 < 0:
            raise ModelError("learning_rate must be > 0 and l2 >= 0")


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(model: MlpModel, xs: np.ndarray, ys: np.ndarray,
                  l2: float = 0.0) -> tuple[float, dict[str, np.ndarray]]:
    """Mean softmax cross-entropy (plus L2 on weights) and its gradients.

    ``ys`` holds integer class labels.  The L2 term is
    ``l2/2 * (|w1|^2 + |w2|^2)``; biases are not penalised.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=int)
    n = xs.shape[0]
    if n == 0:
        raise ModelError("empty training batch")
    z = xs @ model.w1.T + model.b1
    a = np.maximum(z, 0.0)
    logits = a @ model.w2.T + model.b2
    probs = _softmax(logits)
    nll = -np.log(np.clip(probs[np.arange(n), ys], 1e-300, None))
    loss = float(np.mean(nll)) + 0.5 * l2 * (
        float(np.sum(model.w1 ** 2)) + float(np.sum(model.w2 ** 2)))

    dlogits = probs.copy()
    dlogits[np.arange(n), ys] -= 1.0
    dlogits /= n
    gw2 = dlogits.T @ a + l2 * model.w2
    gb2 = dlogits.sum(axis=0)
    da = dlogits @ model.w2
    dz = da * (z > 0.0)
    gw1 = dz.T @ xs + l2 * model.w1
    gb1 = dz.sum(axis=0)
    return loss, {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}


def init_model(input_dim: int, config: TrainConfig,
               class_names: tuple[str, ...],
               bin_edges: np.ndarray) -> MlpModel:
    """Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) weights, zero biases."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed & (2**64 - 1)))
    lim1 = np.sqrt(6.0 / input_dim)
    lim2 = np.sqrt(6.0 / config.hidden_dim)
    return MlpModel(
        w1=rng.uniform(-lim1, lim1, size=(config.hidden_dim, input_dim)),
        b1=np.zeros(config.hidden_dim),
        w2=rng.uniform(-lim2, lim2, size=(4, config.hidden_dim)),
        b2=np.zeros(4),
        class_names=class_names,
        bin_edges=bin_edges,
    )


def train(xs: np.ndarray, ys: np.ndarray, config: TrainConfig,
          class_names: tuple[str, ...], bin_edges: np.ndarray) -> MlpModel:
    """Minibatch SGD; deterministic in ``config.seed``.

    Every epoch shuffles the data once and walks it in batches of
    ``batch_size`` (last batch may be short).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=int)
    if xs.ndim != 2 or xs.shape[0] != ys.shape[0] or xs.shape[0] == 0:
        raise ModelError("training data must be non-empty with matching shapes")
    if ys.min() < 0 or ys.max() > 3:
        raise ModelError("labels must lie in 0..3")
    model = init_model(xs.shape[1], config, class_names, bin_edges)
    w1, b1 = model.w1.copy(), model.b1.copy()
    w2, b2 = model.w2.copy(), model.b2.copy()
    rng = np.random.default_rng(
        np.random.SeedSequence((config.seed & (2**64 - 1), 1)))
    n = xs.shape[0]
    # `work` shares the arrays being updated in place, so loss_and_grad
    # always sees the current parameters without rebuilding the model.
    work = MlpModel(w1, b1, w2, b2, class_names, bin_edges)
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            _, grads = loss_and_grad(work, xs[idx], ys[idx], l2=config.l2)
            w1 -= config.learning_rate * grads["w1"]
            b1 -= config.learning_rate * grads["b1"]
            w2 -= config.learning_rate * grads["w2"]
            b2 -= config.learning_rate * grads["b2"]
    meta = {"epochs": config.epochs, "learning_rate": config.learning_rate,
            "batch_size": config.batch_size, "l2": config.l2,
            "seed": config.seed, "n_train": int(n)}
    return MlpModel(w1, b1, w2, b2, class_names, bin_edges, meta)


def _nested(arr: np.ndarray) -> list:
    return [[float(v) for v in row] for row in arr] if arr.ndim == 2 else [
        float(v) for v in arr]


def save_model(model: MlpModel, path: str | Path) -> None:
    from .formats import atomic_write_text

    doc = {
        "format": FORMAT_TAG,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "n_classes": model.n_classes,
        "class_names": list(model.class_names),
        "w1": _nested(model.w1),
        "b1": _nested(model.b1),
        "w2": _nested(model.w2),
        "b2": _nested(model.b2),
        "bin_edges": _nested(model.bin_edges),
        "meta": model.meta,
    }
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path) -> MlpModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise ModelError(f"{path} is not a {FORMAT_TAG} model file")
    try:
        model = MlpModel(
            w1=np.array(doc["w1"], dtype=float),
            b1=np.array(doc["b1"], dtype=float),
            w2=np.array(doc["w2"], dtype=float),
            b2=np.array(doc["b2"], dtype=float),
            class_names=tuple(doc["class_names"]),
            bin_edges=np.array(doc["bin_edges"], dtype=float),
            meta=dict(doc.get("meta", {})),
        )
    except (KeyError, TypeError) as exc:
        raise ModelError(f"model file {path} is missing fields: {exc}") from exc
    for key in ("input_dim", "hidden_dim", "n_classes"):
        declared = doc.get(key)
        actual = getattr(model, key)
        if declared != actual:
            raise ModelError(
                f"{path}: declared {key}={declared} but arrays give {actual}")
    return model
