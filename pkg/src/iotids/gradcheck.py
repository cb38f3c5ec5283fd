"""Finite-difference verification of the backpropagation gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn

ARCHITECTURES = ((2, 2, 1), (6, 3, 1), (4, 5, 3, 1))
REL_TOL = 1e-5
ABS_FLOOR = 1e-8


@dataclass(frozen=True)
class CaseResult:
    case: int
    layer_sizes: tuple[int, ...]
    max_abs_err: float
    max_rel_err: float
    passed: bool


def compare(analytic: nn.Gradients, numeric: nn.Gradients) -> tuple[float, float, bool]:
    """Largest absolute/relative discrepancy and whether every entry is within tolerance.

    An entry passes when ``|a - n| <= max(REL_TOL * max(|a|, |n|), ABS_FLOOR)``.
    """
    worst_abs = worst_rel = 0.0
    ok = True
    for a, n in zip(analytic.parameters(), numeric.parameters()):
        diff = np.abs(a - n)
        scale = np.maximum(np.abs(a), np.abs(n))
        ok &= bool(np.all(diff <= np.maximum(REL_TOL * scale, ABS_FLOOR)))
        worst_abs = max(worst_abs, float(diff.max(initial=0.0)))
        rel = np.divide(diff, scale, out=np.zeros_like(diff), where=scale > ABS_FLOOR)
        worst_rel = max(worst_rel, float(rel.max(initial=0.0)))
    return worst_abs, worst_rel, ok


def random_case(rng: np.random.Generator, layer_sizes) -> tuple[nn.MlpModel, np.ndarray, float]:
    model = nn.init_params(layer_sizes, int(rng.integers(2**32)))
    for b in model.biases:
        b[:] = rng.uniform(-0.5, 0.5, size=b.shape)
    x = rng.normal(size=layer_sizes[0])
    y = float(rng.integers(0, 2))
    return model, x, y


def run_suite(seed: int = 0, n_cases: int = 100) -> list[CaseResult]:
    """Check ``n_cases`` random (architecture, sample) pairs, cycling through ARCHITECTURES."""
    rng = np.random.default_rng(seed)
    results = []
    for case in range(n_cases):
        sizes = ARCHITECTURES[case % len(ARCHITECTURES)]
        model, x, y = random_case(rng, sizes)
        worst_abs, worst_rel, ok = compare(nn.backprop(model, x, y), nn.numerical_gradient(model, x, y))
        results.append(CaseResult(case, sizes, worst_abs, worst_rel, ok))
    return results
