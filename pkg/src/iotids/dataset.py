"""Dataset CSV persistence and the seeded train/validation/test split."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, InvalidInputError, ParseError
from .features import FEATURE_NAMES, FEATURE_VERSION, N_FEATURES, Sample, WindowSpec

DATASET_HEADER = "x1,x2,x3,x4,x5,x6,label,window_start_s"


@dataclass(frozen=True)
class SplitSpec:
    val_frac: float = 0.15
    test_frac: float = 0.15
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        for name in ("val_frac", "test_frac"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(name, "must be a non-negative number")
        if self.val_frac + self.test_frac >= 1:
            raise ConfigError("val_frac", "val_frac + test_frac must be < 1")
        if self.seed < 0:
            raise ConfigError("seed", "must be unsigned")


@dataclass
class Split:
    train: list[Sample]
    val: list[Sample]
    test: list[Sample]
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def __iter__(self):
        return iter((self.train, self.val, self.test))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _apportion(total: int, weights: Sequence[int]) -> list[int]:
    """Split ``total`` proportionally to ``weights`` by largest remainder (ties to lower index)."""
    whole = sum(weights)
    quotas = [total * w / whole for w in weights]
    alloc = [int(math.floor(q)) for q in quotas]
    rest = total - sum(alloc)
    by_remainder = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - alloc[i]), i))
    for i in by_remainder[:rest]:
        alloc[i] += 1
    return alloc


def split_sizes(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    n_val = _round_half_up(spec.val_frac * n)
    n_test = _round_half_up(spec.test_frac * n)
    return n - n_val - n_test, n_val, n_test


def split_indices(labels: Sequence[int], spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index arrays (each sorted ascending) for the train, validation and test splits."""
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if n < 10:
        raise InvalidInputError(f"need at least 10 samples to split, got {n}")
    n_train, n_val, n_test = split_sizes(n, spec)
    if n_train < 1:
        raise InvalidInputError("split leaves no training samples")
    rng = np.random.default_rng(spec.seed)

    if spec.stratified:
        classes = [0, 1]
        members = [np.flatnonzero(labels == c) for c in classes]
        if any(len(m) == 0 for m in members):
            raise InvalidInputError("stratified split needs both classes present")
        sizes = [len(m) for m in members]
        val_c = _apportion(n_val, sizes)
        test_c = _apportion(n_test, sizes)
        parts = {"train": [], "val": [], "test": []}
        for m, nv, nt in zip(members, val_c, test_c):
            perm = m[rng.permutation(len(m))]
            parts["val"].append(perm[:nv])
            parts["test"].append(perm[nv:nv + nt])
            parts["train"].append(perm[nv + nt:])
        tr, va, te = (np.sort(np.concatenate(parts[k])) for k in ("train", "val", "test"))
    else:
        perm = rng.permutation(n)
        va, te, tr = np.sort(perm[:n_val]), np.sort(perm[n_val:n_val + n_test]), np.sort(perm[n_val + n_test:])
    return tr, va, te


def split(samples: Sequence[Sample], spec: SplitSpec | None = None) -> Split:
    spec = spec or SplitSpec()
    samples = list(samples)
    tr, va, te = split_indices([s.label for s in samples], spec)
    pick = lambda idx: [samples[i] for i in idx]  # noqa: E731
    return Split(pick(tr), pick(va), pick(te), tr, va, te)


def class_counts(samples: Sequence[Sample]) -> tuple[int, int]:
    """``(n_attack, n_normal)``."""
    n_attack = sum(1 for s in samples if s.label == 1)
    return n_attack, len(samples) - n_attack


# CSV -------------------------------------------------------------------------

def _g(v: float) -> str:
    return format(float(v), ".17g")


def save_dataset(samples: Sequence[Sample], path, window: WindowSpec | None = None) -> None:
    window = window or WindowSpec()
    lines = [
        f"# features={FEATURE_VERSION} {' '.join(FEATURE_NAMES)} {window.describe()}",
        DATASET_HEADER,
    ]
    for s in samples:
        lines.append(",".join(_g(v) for v in s.features) + f",{s.label},{_g(s.window_start_s)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> list[Sample]:
    """Read a dataset CSV; comment lines (``#``) are skipped, the header row is required."""
    path = str(path)
    samples: list[Sample] = []
    header_seen = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != DATASET_HEADER:
                    raise ParseError(f"expected header {DATASET_HEADER!r}", lineno, path)
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != N_FEATURES + 2:
                raise ParseError(f"expected {N_FEATURES + 2} fields, found {len(parts)}", lineno, path)
            try:
                feats = [float(t) for t in parts[:N_FEATURES]]
                start = float(parts[-1])
            except ValueError:
                raise ParseError("non-numeric field", lineno, path) from None
            if not all(math.isfinite(v) for v in feats + [start]):
                raise ParseError("non-finite value", lineno, path)
            if parts[N_FEATURES] not in ("0", "1"):
                raise ParseError(f"label must be 0 or 1, got {parts[N_FEATURES]!r}", lineno, path)
            samples.append(Sample(np.array(feats), int(parts[N_FEATURES]), start))
    if not header_seen:
        raise ParseError("missing header row", None, path)
    return samples
