"""Multilayer perceptron with sigmoid units, squared-error cost and per-sample SGD.

Weights are stored as ``(next_layer, prev_layer)`` matrices so that entry
``weights[l][i, j]`` connects unit ``j`` of layer ``l`` to unit ``i`` of layer
``l + 1``.  Everything runs in float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernel
from .errors import ConfigError, DivergenceError, InvalidInputError, ParseError

_SIG_HI = np.nextafter(1.0, 0.0)
_SIG_LO = np.finfo(np.float64).tiny


@dataclass(eq=False)
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        _check_layer_sizes(self.layer_sizes)
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise InvalidInputError("expected one weight matrix and one bias vector per layer pair")
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in self.biases]
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            n_in, n_out = self.layer_sizes[l], self.layer_sizes[l + 1]
            if w.shape != (n_out, n_in):
                raise InvalidInputError(f"weights[{l}] has shape {w.shape}, expected {(n_out, n_in)}")
            if b.shape != (n_out,):
                raise InvalidInputError(f"biases[{l}] has shape {b.shape}, expected {(n_out,)}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidInputError(f"layer {l} has non-finite parameters")

    @classmethod
    def zeros(cls, layer_sizes: Sequence[int]) -> "MlpModel":
        sizes = tuple(int(s) for s in layer_sizes)
        _check_layer_sizes(sizes)
        return cls(
            sizes,
            [np.zeros((b, a)) for a, b in zip(sizes[:-1], sizes[1:])],
            [np.zeros(b) for b in sizes[1:]],
        )

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes)

    def copy(self) -> "MlpModel":
        return MlpModel(self.layer_sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def parameters(self) -> list[np.ndarray]:
        """All parameter arrays, weights then bias per layer."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def __eq__(self, other):
        if not isinstance(other, MlpModel):
            return NotImplemented
        return self.layer_sizes == other.layer_sizes and all(
            np.array_equal(p, q) for p, q in zip(self.parameters(), other.parameters())
        )


@dataclass
class ForwardTrace:
    pre_activations: list[np.ndarray]
    activations: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


@dataclass
class Gradients:
    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weight_grads, self.bias_grads):
            out.extend((w, b))
        return out


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    max_epochs: int = 500
    patience: int = 20
    seed: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ConfigError("learning_rate", f"must be > 0, got {self.learning_rate}")
        if int(self.max_epochs) < 1:
            raise ConfigError("max_epochs", f"must be >= 1, got {self.max_epochs}")
        if int(self.patience) < 0:
            raise ConfigError("patience", f"must be >= 0, got {self.patience}")
        if int(self.seed) < 0:
            raise ConfigError("seed", f"must be unsigned, got {self.seed}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold", f"must lie in (0, 1), got {self.threshold}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float


@dataclass
class TrainResult:
    model: MlpModel
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0


def _check_layer_sizes(sizes: Sequence[int]) -> None:
    if len(sizes) < 2:
        raise InvalidInputError(f"need at least 2 layers, got {list(sizes)}")
    if any(s < 1 for s in sizes):
        raise InvalidInputError(f"layer sizes must be >= 1, got {list(sizes)}")


def sigmoid(z):
    """Logistic function, stable for large ``|z|`` and clamped strictly inside (0, 1).

    Accepts a scalar or an array; returns the same kind.
    """
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = np.clip(out, _SIG_LO, _SIG_HI)
    return float(out) if out.ndim == 0 else out


def sigmoid_prime_from_activation(a):
    """Derivative of the sigmoid expressed through its output ``a = sigmoid(z)``."""
    return a * (1.0 - a)


def _as_input(model: MlpModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.layer_sizes[0],):
        raise InvalidInputError(f"input has shape {x.shape}, model expects ({model.layer_sizes[0]},)")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("input contains non-finite values")
    return x


def forward(model: MlpModel, x) -> ForwardTrace:
    a = _as_input(model, x)
    pre, acts = [], [a]
    for w, b in zip(model.weights, model.biases):
        z = w @ a + b
        a = sigmoid(z)
        pre.append(z)
        acts.append(a)
    return ForwardTrace(pre, acts)


def forward_batch(model: MlpModel, X) -> np.ndarray:
    """Network outputs for every row of ``X``; shape ``(n, layer_sizes[-1])``."""
    a = np.asarray(X, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != model.layer_sizes[0]:
        raise InvalidInputError(f"batch has shape {a.shape}, model expects (n, {model.layer_sizes[0]})")
    for w, b in zip(model.weights, model.biases):
        a = sigmoid(a @ w.T + b)
    return a


def output_delta(y, trace: ForwardTrace) -> np.ndarray:
    out = trace.output
    y = np.broadcast_to(np.asarray(y, dtype=np.float64), out.shape)
    return -(y - out) * sigmoid_prime_from_activation(out)


def hidden_deltas(model: MlpModel, trace: ForwardTrace, out_delta) -> list[np.ndarray]:
    """Error terms for every non-input layer, front to back (last entry is ``out_delta``)."""
    deltas = [np.asarray(out_delta, dtype=np.float64)]
    for l in range(model.n_layers - 2, 0, -1):
        back = model.weights[l].T @ deltas[0]
        deltas.insert(0, back * sigmoid_prime_from_activation(trace.activations[l]))
    return deltas


def gradients(trace: ForwardTrace, deltas: Sequence[np.ndarray]) -> Gradients:
    wg = [np.outer(d, a) for d, a in zip(deltas, trace.activations[:-1])]
    bg = [np.array(d, dtype=np.float64) for d in deltas]
    return Gradients(wg, bg)


def backprop(model: MlpModel, x, y) -> Gradients:
    """Per-sample gradient of ``0.5 * ||y - h(x)||^2``."""
    trace = forward(model, x)
    return gradients(trace, hidden_deltas(model, trace, output_delta(y, trace)))


def sample_cost(model: MlpModel, x, y) -> float:
    out = forward(model, x).output
    diff = np.asarray(y, dtype=np.float64) - out
    return 0.5 * float(np.sum(diff * diff))


def numerical_gradient(model: MlpModel, x, y, h: float = 1e-5) -> Gradients:
    """Central finite-difference estimate of the per-sample cost gradient."""
    probe = model.copy()
    grads = []
    for p in probe.parameters():
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            up = sample_cost(probe, x, y)
            flat[k] = orig - h
            down = sample_cost(probe, x, y)
            flat[k] = orig
            gflat[k] = (up - down) / (2.0 * h)
        grads.append(g)
    return Gradients(grads[0::2], grads[1::2])


def _features_and_labels(samples) -> tuple[np.ndarray, np.ndarray]:
    """Accepts a sequence of objects with ``features``/``label`` or an ``(X, y)`` pair."""
    if isinstance(samples, tuple) and len(samples) == 2 and isinstance(samples[0], np.ndarray):
        X, y = samples
    else:
        samples = list(samples)
        if not samples:
            return np.empty((0, 0)), np.empty(0)
        X = np.array([s.features for s in samples], dtype=np.float64)
        y = np.array([s.label for s in samples], dtype=np.float64)
    return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)


def _mse(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    out = forward_batch(model, X)
    diff = y.reshape(len(y), -1) - out
    return float(np.mean(0.5 * np.sum(diff * diff, axis=1)))


def mse_cost(model: MlpModel, samples) -> float:
    """Mean over samples of ``0.5 * ||y - h(x)||^2``."""
    X, y = _features_and_labels(samples)
    if len(y) == 0:
        raise InvalidInputError("mse_cost needs at least one sample")
    return _mse(model, X, y)


def sgd_step(model: MlpModel, grads: Gradients, learning_rate: float) -> MlpModel:
    new = model.copy()
    _sgd_update(new, grads, learning_rate)
    return new


def _sgd_update(model: MlpModel, grads: Gradients, learning_rate: float) -> None:
    for p, g in zip(model.parameters(), grads.parameters()):
        if p.shape != g.shape:
            raise InvalidInputError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
        p -= learning_rate * g


def init_params(layer_sizes: Sequence[int], seed: int) -> MlpModel:
    """Weights uniform on [-0.5, 0.5] from a seeded generator, zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    _check_layer_sizes(sizes)
    rng = np.random.default_rng(seed)
    weights = [rng.uniform(-0.5, 0.5, size=(b, a)) for a, b in zip(sizes[:-1], sizes[1:])]
    return MlpModel(sizes, weights, [np.zeros(b) for b in sizes[1:]])


def predict(model: MlpModel, x, threshold: float = 0.5) -> int:
    if not 0.0 < threshold < 1.0:
        raise InvalidInputError(f"threshold must lie in (0, 1), got {threshold}")
    return int(forward(model, x).output[0] > threshold)


def predict_batch(model: MlpModel, X, threshold: float = 0.5) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise InvalidInputError(f"threshold must lie in (0, 1), got {threshold}")
    return (forward_batch(model, X)[:, 0] > threshold).astype(np.int64)


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    """Visiting order of the training samples in a given (1-based) epoch."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def train(model: MlpModel, train_set, val_set, config: TrainConfig) -> TrainResult:
    """Per-sample SGD with per-epoch reshuffling and early stopping on validation MSE.

    The returned model is the snapshot with the lowest validation MSE; the
    input model is left untouched.
    """
    X, y = _features_and_labels(train_set)
    Xv, yv = _features_and_labels(val_set)
    if len(y) == 0 or len(yv) == 0:
        raise InvalidInputError("train and validation sets must be non-empty")
    for name, arr in (("train", X), ("validation", Xv)):
        if arr.shape[1] != model.layer_sizes[0]:
            raise InvalidInputError(
                f"{name} features have width {arr.shape[1]}, model expects {model.layer_sizes[0]}"
            )

    sizes = np.array(model.layer_sizes, dtype=np.int64)
    flat, offsets = _kernel.flatten(model.weights, model.biases)
    X = np.ascontiguousarray(X)
    best, best_val, best_epoch, stale = model.copy(), math.inf, 0, 0
    history: list[EpochRecord] = []
    for epoch in range(1, config.max_epochs + 1):
        order = epoch_order(config.seed, epoch, len(y))
        _kernel.sgd_epoch(flat, offsets, sizes, X, y, order, float(config.learning_rate))
        if not np.all(np.isfinite(flat)):
            raise DivergenceError(epoch)
        current = MlpModel(model.layer_sizes, *_kernel.unflatten(flat, model.layer_sizes))
        train_mse = _mse(current, X, y)
        val_mse = _mse(current, Xv, yv)
        if not (math.isfinite(train_mse) and math.isfinite(val_mse)):
            raise DivergenceError(epoch)
        history.append(EpochRecord(epoch, train_mse, val_mse))
        if val_mse < best_val:
            best, best_val, best_epoch, stale = current, val_mse, epoch, 0
        else:
            stale += 1
            if stale >= max(config.patience, 1):
                break
    return TrainResult(best, history, best_epoch)


# persistence ---------------------------------------------------------------

def _fmt(values: Iterable[float]) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def format_model(model: MlpModel) -> str:
    lines = [f"mlp {model.n_layers} " + " ".join(str(s) for s in model.layer_sizes)]
    for w, b in zip(model.weights, model.biases):
        lines.append(_fmt(w.reshape(-1)))
        lines.append(_fmt(b))
    return "\n".join(lines) + "\n"


def save_model(model: MlpModel, path) -> None:
    Path(path).write_text(format_model(model))


def parse_model(text: str, path: str | None = None) -> MlpModel:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty model file", None, path)
    head = lines[0].split()
    if len(head) < 3 or head[0] != "mlp":
        raise ParseError("header must be 'mlp <n_layers> <size_1> ... <size_L>'", 1, path)
    try:
        n = int(head[1])
        sizes = [int(t) for t in head[2:]]
    except ValueError:
        raise ParseError("non-integer layer size in header", 1, path) from None
    if len(sizes) != n:
        raise ParseError(f"header declares {n} layers but lists {len(sizes)} sizes", 1, path)
    try:
        _check_layer_sizes(sizes)
    except InvalidInputError as exc:
        raise ParseError(str(exc), 1, path) from None
    expected = 1 + 2 * (n - 1)
    if len(lines) != expected:
        raise ParseError(f"expected {expected} lines, found {len(lines)}", None, path)

    def row(lineno: int, count: int) -> np.ndarray:
        toks = lines[lineno - 1].split()
        if len(toks) != count:
            raise ParseError(f"expected {count} values, found {len(toks)}", lineno, path)
        try:
            vals = np.array([float(t) for t in toks], dtype=np.float64)
        except ValueError:
            raise ParseError("non-numeric parameter value", lineno, path) from None
        if not np.all(np.isfinite(vals)):
            raise ParseError("non-finite parameter value", lineno, path)
        return vals

    weights, biases = [], []
    for l in range(n - 1):
        a, b = sizes[l], sizes[l + 1]
        weights.append(row(2 + 2 * l, a * b).reshape(b, a))
        biases.append(row(3 + 2 * l, b))
    return MlpModel(tuple(sizes), weights, biases)


def load_model(path) -> MlpModel:
    p = Path(path)
    return parse_model(p.read_text(), str(p))


def write_history(history: Sequence[EpochRecord], path) -> None:
    lines = ["epoch,train_mse,val_mse"]
    lines += [f"{r.epoch},{r.train_mse:.17g},{r.val_mse:.17g}" for r in history]
    Path(path).write_text("\n".join(lines) + "\n")
