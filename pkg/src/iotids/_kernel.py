"""Compiled inner loop for one epoch of per-sample SGD.

Parameters live in one flat float64 vector laid out layer by layer as
``W_l`` (row-major, ``(n_out, n_in)``) followed by ``b_l``.  The arithmetic
mirrors :func:`iotids.nn.backprop` followed by :func:`iotids.nn.sgd_step`.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_SIG_HI = float(np.nextafter(1.0, 0.0))
_SIG_LO = float(np.finfo(np.float64).tiny)


def flatten(weights, biases) -> tuple[np.ndarray, np.ndarray]:
    """Flat parameter vector plus per-layer start offsets."""
    chunks, offsets, pos = [], [], 0
    for w, b in zip(weights, biases):
        offsets.append(pos)
        chunks.append(w.reshape(-1))
        chunks.append(b)
        pos += w.size + b.size
    return np.concatenate(chunks).astype(np.float64), np.array(offsets, dtype=np.int64)


def unflatten(flat: np.ndarray, sizes) -> tuple[list[np.ndarray], list[np.ndarray]]:
    weights, biases, pos = [], [], 0
    for a, b in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[pos:pos + a * b].reshape(b, a).copy())
        pos += a * b
        biases.append(flat[pos:pos + b].copy())
        pos += b
    return weights, biases


@njit(cache=True)
def _sigmoid(z):
    e = np.exp(-abs(z))
    if z >= 0:
        s = 1.0 / (1.0 + e)
    else:
        s = e / (1.0 + e)
    if s > _SIG_HI:
        return _SIG_HI
    if s < _SIG_LO:
        return _SIG_LO
    return s


@njit(cache=True)
def sgd_epoch(params, offsets, sizes, X, y, order, lr):
    n_layers = sizes.shape[0]
    width = 0
    for s in sizes:
        if s > width:
            width = s
    acts = np.zeros((n_layers, width))
    deltas = np.zeros((n_layers, width))
    for i in order:
        for k in range(sizes[0]):
            acts[0, k] = X[i, k]
        for l in range(n_layers - 1):
            n_in, n_out, off = sizes[l], sizes[l + 1], offsets[l]
            boff = off + n_in * n_out
            for r in range(n_out):
                z = 0.0
                for c in range(n_in):
                    z += params[off + r * n_in + c] * acts[l, c]
                acts[l + 1, r] = _sigmoid(z + params[boff + r])
        last = n_layers - 1
        for r in range(sizes[last]):
            a = acts[last, r]
            deltas[last, r] = -(y[i] - a) * (a * (1.0 - a))
        for l in range(n_layers - 2, 0, -1):
            n_in, n_out, off = sizes[l], sizes[l + 1], offsets[l]
            for c in range(n_in):
                s = 0.0
                for r in range(n_out):
                    s += params[off + r * n_in + c] * deltas[l + 1, r]
                a = acts[l, c]
                deltas[l, c] = s * (a * (1.0 - a))
        for l in range(n_layers - 1):
            n_in, n_out, off = sizes[l], sizes[l + 1], offsets[l]
            boff = off + n_in * n_out
            for r in range(n_out):
                d = deltas[l + 1, r]
                for c in range(n_in):
                    params[off + r * n_in + c] -= lr * (d * acts[l, c])
                params[boff + r] -= lr * d
