"""Small differentiable classifiers with hand-written backpropagation.

Models take pixel images in [0, 255] of a fixed (H, W, C) shape and map
them to ``pixel / 255 - 0.5`` internally. The loss is softmax cross-entropy.
"""

import copy
import json
import os

import numpy as np

from . import fileio
from .tensor import DimensionError


class TrainingError(RuntimeError):
    pass


def log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _argmax_low(z):
    # np.argmax returns the first maximum, i.e. ties go to the lowest index
    return int(np.argmax(z))


class Classifier:
    """Common surface: ``logits``, ``loss_and_grad``, ``predict``."""

    kind = "base"

    def __init__(self, input_shape, num_classes):
        self.input_shape = tuple(int(s) for s in input_shape)
        self.num_classes = int(num_classes)
        self.input_dim = int(np.prod(self.input_shape))

    def _flat(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape == self.input_shape:
            return X.reshape(1, -1) / 255.0 - 0.5
        if X.shape[1:] != self.input_shape:
            raise DimensionError(f"model expects {self.input_shape}, got {X.shape}")
        return X.reshape(X.shape[0], -1) / 255.0 - 0.5

    def _check_label(self, y):
        y = int(y)
        if not 0 <= y < self.num_classes:
            raise ValueError(f"label {y} out of range [0, {self.num_classes})")
        return y

    def _check_params(self):
        for name, p in self.params.items():
            if not np.all(np.isfinite(p)):
                raise FloatingPointError(f"parameter {name} is not finite")

    def logits(self, X):
        return self._forward(self._flat(X))[0]

    def predict(self, x):
        return _argmax_low(self.logits(x)[0])

    def predict_batch(self, X):
        return np.argmax(self.logits(X), axis=1)

    def loss(self, x, y):
        y = self._check_label(y)
        return float(-log_softmax(self.logits(x)[0])[y])

    def loss_and_grad(self, x, y):
        """Cross-entropy loss at ``x`` and its gradient w.r.t. the pixels of ``x``."""
        self._check_params()
        y = self._check_label(y)
        z, cache = self._forward(self._flat(x))
        lp = log_softmax(z)
        dz = np.exp(lp)
        dz[0, y] -= 1.0
        dx = self._backward_input(dz, cache) / 255.0
        return float(-lp[0, y]), dx.reshape(self.input_shape)

    def batch_loss_and_param_grads(self, X, Y):
        """Mean loss over a batch and gradients w.r.t. every parameter."""
        Xf = self._flat(X)
        Y = np.asarray(Y, dtype=np.int64)
        z, cache = self._forward(Xf)
        lp = log_softmax(z)
        n = Xf.shape[0]
        loss = -lp[np.arange(n), Y].mean()
        dz = np.exp(lp)
        dz[np.arange(n), Y] -= 1.0
        return float(loss), self._backward_params(dz / n, cache)

    def copy(self):
        return copy.deepcopy(self)


class LinearSoftmaxModel(Classifier):
    """Logits ``u @ W + b`` with ``u = x/255 - 0.5``."""

    kind = "linear"

    def __init__(self, input_shape, num_classes, seed=0, init_scale=0.01):
        super().__init__(input_shape, num_classes)
        rng = np.random.default_rng(seed)
        self.params = {
            "W": init_scale * rng.standard_normal((self.input_dim, self.num_classes)),
            "b": np.zeros(self.num_classes),
        }

    def _forward(self, Xf):
        return Xf @ self.params["W"] + self.params["b"], Xf

    def _backward_input(self, dz, Xf):
        return dz @ self.params["W"].T

    def _backward_params(self, dz, Xf):
        return {"W": Xf.T @ dz, "b": dz.sum(axis=0)}


class MlpModel(Classifier):
    """One hidden tanh layer: ``tanh(u @ W1 + b1) @ W2 + b2`` with ``u = x/255 - 0.5``.

    tanh keeps the input gradient smooth, so finite-difference checks have no
    kinks to dodge.
    """

    kind = "mlp"

    def __init__(self, input_shape, num_classes, hidden=64, seed=0):
        super().__init__(input_shape, num_classes)
        if hidden < 1:
            raise ValueError("hidden width must be at least 1")
        self.hidden = int(hidden)
        rng = np.random.default_rng(seed)
        self.params = {
            "W1": rng.standard_normal((self.input_dim, self.hidden)) / np.sqrt(self.input_dim),
            "b1": np.zeros(self.hidden),
            "W2": rng.standard_normal((self.hidden, self.num_classes)) / np.sqrt(self.hidden),
            "b2": np.zeros(self.num_classes),
        }

    def _forward(self, Xf):
        h = np.tanh(Xf @ self.params["W1"] + self.params["b1"])
        return h @ self.params["W2"] + self.params["b2"], (Xf, h)

    def _backward_input(self, dz, cache):
        _, h = cache
        dpre = (dz @ self.params["W2"].T) * (1.0 - h**2)
        return dpre @ self.params["W1"].T

    def _backward_params(self, dz, cache):
        Xf, h = cache
        dpre = (dz @ self.params["W2"].T) * (1.0 - h**2)
        return {
            "W1": Xf.T @ dpre,
            "b1": dpre.sum(axis=0),
            "W2": h.T @ dz,
            "b2": dz.sum(axis=0),
        }


class EnsembleModel:
    """Equal-weight ensemble: mean member loss, mean member gradient.

    ``predict`` takes the argmax of the mean member logits.
    """

    kind = "ensemble"

    def __init__(self, members):
        members = list(members)
        if not members:
            raise ValueError("ensemble needs at least one member")
        first = members[0]
        for m in members[1:]:
            if m.input_shape != first.input_shape or m.num_classes != first.num_classes:
                raise DimensionError("ensemble members disagree on input shape or class count")
        self.members = members
        self.input_shape = first.input_shape
        self.num_classes = first.num_classes

    def loss_and_grad(self, x, y):
        losses, grads = zip(*(m.loss_and_grad(x, y) for m in self.members))
        return float(np.mean(losses)), np.mean(grads, axis=0)

    def loss(self, x, y):
        return float(np.mean([m.loss(x, y) for m in self.members]))

    def logits(self, X):
        return np.mean([m.logits(X) for m in self.members], axis=0)

    def predict(self, x):
        return _argmax_low(self.logits(x)[0])

    def predict_batch(self, X):
        return np.argmax(self.logits(X), axis=1)


def ensemble_loss_and_grad(ens, x, y):
    return ens.loss_and_grad(x, y)


def predict(model, x):
    return model.predict(x)


def accuracy(model, X, Y):
    if len(Y) == 0:
        return float("nan")
    return float(np.mean(model.predict_batch(X) == np.asarray(Y)))


def train(model, dataset, epochs=30, lr=0.05, seed=0, batch_size=32, momentum=0.0):
    """Minibatch SGD (optionally with heavy-ball momentum) on the train split.

    Returns a trained copy of ``model`` (the argument is left untouched) and
    its accuracy on the held-out split.
    """
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    X, Y = dataset.split("train")
    if len(Y) == 0:
        raise ValueError("training split is empty")
    model = model.copy()
    rng = np.random.default_rng(seed)
    n = len(Y)
    velocity = {name: np.zeros_like(p) for name, p in model.params.items()}
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss, grads = model.batch_loss_and_param_grads(X[idx], Y[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"training diverged at epoch {epoch}")
            for name, gp in grads.items():
                velocity[name] = momentum * velocity[name] - lr * gp
                model.params[name] += velocity[name]
    Xh, Yh = dataset.split("heldout")
    if len(Yh) == 0:
        Xh, Yh = X, Y
    return model, accuracy(model, Xh, Yh)


def build_model(kind, input_shape, num_classes, hidden=64, seed=0):
    if kind == "linear":
        return LinearSoftmaxModel(input_shape, num_classes, seed=seed)
    if kind == "mlp":
        return MlpModel(input_shape, num_classes, hidden=hidden, seed=seed)
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, directory, seed=None, accuracy=None):
    """Write one ATNS file per parameter plus ``manifest.json``."""
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "kind": model.kind,
        "input_shape": list(model.input_shape),
        "num_classes": model.num_classes,
        "hidden": getattr(model, "hidden", None),
        "seed": seed,
        "accuracy": accuracy,
        "params": {},
    }
    for name, p in model.params.items():
        fname = f"{name}.atns"
        fileio.write_atns(os.path.join(directory, fname), p)
        manifest["params"][name] = {"file": fname, "shape": list(p.shape)}
    with open(os.path.join(directory, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)


def load_model(directory):
    with open(os.path.join(directory, "manifest.json")) as f:
        manifest = json.load(f)
    model = build_model(manifest["kind"], manifest["input_shape"], manifest["num_classes"],
                        hidden=manifest.get("hidden") or 1)
    for name, entry in manifest["params"].items():
        p = fileio.read_atns(os.path.join(directory, entry["file"]))
        model.params[name] = p.reshape(entry["shape"])
    model._check_params()
    return model, manifest
