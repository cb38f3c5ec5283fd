"""Windowed traffic features and min-max normalization.

Each non-empty window of a trace becomes one six-feature sample:

    0 rate_pps        packets per second
    1 bytes_ps        bytes per second
    2 n_sources       distinct source nodes
    3 frac_to_server  fraction of packets addressed to the server
    4 mean_iat_s      mean inter-arrival time (window length for a lone packet)
    5 mean_size_b     mean packet size in bytes
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, InvalidInputError
from .simulator import NS_PER_S, Role, Trace

FEATURE_VERSION = "v1"
FEATURE_NAMES = ("rate_pps", "bytes_ps", "n_sources", "frac_to_server", "mean_iat_s", "mean_size_b")
N_FEATURES = len(FEATURE_NAMES)


@dataclass(eq=False)
class Sample:
    features: np.ndarray
    label: int
    window_start_s: float = 0.0

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.shape != (N_FEATURES,):
            raise InvalidInputError(f"sample needs {N_FEATURES} features, got shape {self.features.shape}")
        if self.label not in (0, 1):
            raise InvalidInputError(f"label must be 0 or 1, got {self.label!r}")
        self.label = int(self.label)

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            np.array_equal(self.features, other.features)
            and self.label == other.label
            and self.window_start_s == other.window_start_s
        )

    def __repr__(self):
        feats = ", ".join(f"{v:.4g}" for v in self.features)
        return f"Sample([{feats}], label={self.label}, window_start_s={self.window_start_s})"


@dataclass(frozen=True)
class WindowSpec:
    window_len_s: float = 0.5
    attack_frac_threshold: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.window_len_s) and self.window_len_s > 0):
            raise ConfigError("window_len_s", "must be > 0")
        if round(self.window_len_s * NS_PER_S) < 1:
            raise ConfigError("window_len_s", "must be at least 1 ns")
        if not 0 < self.attack_frac_threshold <= 1:
            raise ConfigError("attack_frac_threshold", "must lie in (0, 1]")

    def describe(self) -> str:
        return f"window_len_s={self.window_len_s!r} attack_frac_threshold={self.attack_frac_threshold!r}"


@dataclass(frozen=True)
class NormalizationStats:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        if np.any(self.maxs < self.mins):
            raise InvalidInputError("normalization max below min")


def stack(samples: Sequence[Sample]) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and label vector for a list of samples."""
    if not samples:
        return np.empty((0, N_FEATURES)), np.empty(0, dtype=np.int64)
    X = np.array([s.features for s in samples], dtype=np.float64)
    y = np.array([s.label for s in samples], dtype=np.int64)
    return X, y


def window_features(trace: Trace, spec: WindowSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised core of :func:`extract_windows`: ``(X, labels, window_start_s)``."""
    if not trace.is_sorted():
        raise InvalidInputError("trace timestamps are not sorted")
    if len(trace) == 0:
        return np.empty((0, N_FEATURES)), np.empty(0, dtype=np.int64), np.empty(0)

    wlen = spec.window_len_s
    wns = int(round(wlen * NS_PER_S))
    ts = trace.timestamp_ns
    wid = ts // wns
    windows, first, counts = np.unique(wid, return_index=True, return_counts=True)
    last = first + counts - 1

    size = trace.size_bytes.astype(np.float64)
    total_bytes = np.add.reduceat(size, first)
    to_server = np.add.reduceat((trace.dst_role == Role.SERVER).astype(np.float64), first)
    attack = np.add.reduceat(trace.phase.astype(np.float64), first)

    node = trace.src_role.astype(np.int64) * (1 << 32) + trace.src_idx.astype(np.int64)
    nodes, code = np.unique(node, return_inverse=True)
    pair_keys = np.unique(wid * len(nodes) + code.reshape(-1))
    _, n_sources = np.unique(pair_keys // len(nodes), return_counts=True)

    span_s = (ts[last] - ts[first]) / NS_PER_S
    with np.errstate(divide="ignore", invalid="ignore"):
        iat = np.where(counts > 1, span_s / np.maximum(counts - 1, 1), wlen)

    X = np.column_stack([
        counts / wlen,
        total_bytes / wlen,
        n_sources.astype(np.float64),
        to_server / counts,
        iat,
        total_bytes / counts,
    ])
    labels = (attack / counts >= spec.attack_frac_threshold).astype(np.int64)
    return X, labels, windows * wlen


def extract_windows(trace: Trace, spec: WindowSpec | None = None) -> list[Sample]:
    """Raw (unnormalized) samples, one per non-empty window, in time order."""
    X, labels, starts = window_features(trace, spec or WindowSpec())
    return [Sample(x, int(lbl), float(t)) for x, lbl, t in zip(X, labels, starts)]


def fit_normalization(train_samples: Sequence[Sample]) -> NormalizationStats:
    if len(train_samples) == 0:
        raise InvalidInputError("cannot fit normalization on an empty sample set")
    X, _ = stack(list(train_samples))
    return NormalizationStats(X.min(axis=0), X.max(axis=0))


def normalize_array(X: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    span = stats.maxs - stats.mins
    degenerate = span == 0
    safe = np.where(degenerate, 1.0, span)
    out = np.clip((X - stats.mins) / safe, 0.0, 1.0)
    out[:, degenerate] = 0.5
    return out


def apply_normalization(samples: Sequence[Sample], stats: NormalizationStats) -> list[Sample]:
    samples = list(samples)
    if not samples:
        return []
    X, _ = stack(samples)
    Xn = normalize_array(X, stats)
    return [Sample(x, s.label, s.window_start_s) for x, s in zip(Xn, samples)]
