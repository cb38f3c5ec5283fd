"""Confusion matrices, derived metrics and the per-split report.

Attack is the positive class.  A metric whose denominator is zero is
reported as ``None`` in Python and ``undefined`` in rendered output.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidInputError

REPORT_VERSION = "v1"
SPLITS = ("train", "validation", "test")
METRIC_NAMES = ("accuracy", "precision", "recall", "fpr", "f1")
CSV_HEADER = "split,tp,fp,tn,fn," + ",".join(METRIC_NAMES)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise InvalidInputError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float | None
    recall: float | None
    fpr: float | None
    f1: float | None


def _binary(name: str, values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise InvalidInputError(f"{name} must contain only 0 and 1")
    return arr.astype(np.int64)


def confusion(predictions, truths) -> ConfusionMatrix:
    p, t = _binary("predictions", predictions), _binary("truths", truths)
    if len(p) != len(t):
        raise InvalidInputError(f"length mismatch: {len(p)} predictions vs {len(t)} truths")
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (t == 1))),
        fp=int(np.sum((p == 1) & (t == 0))),
        tn=int(np.sum((p == 0) & (t == 0))),
        fn=int(np.sum((p == 0) & (t == 1))),
    )


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total == 0:
        raise InvalidInputError("metrics of an empty confusion matrix")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return Metrics((cm.tp + cm.tn) / cm.total, precision, recall, _ratio(cm.fp, cm.fp + cm.tn), f1)


@dataclass(frozen=True)
class EvalReport:
    splits: Mapping[str, ConfusionMatrix]

    @property
    def all(self) -> ConfusionMatrix:
        total = ConfusionMatrix()
        for cm in self.splits.values():
            total = total + cm
        return total

    def rows(self) -> list[tuple[str, ConfusionMatrix]]:
        return [*self.splits.items(), ("all", self.all)]

    @property
    def overall_accuracy(self) -> float:
        return metrics(self.all).accuracy


def build_report(predictions: Mapping[str, Sequence[int]], truths: Mapping[str, Sequence[int]]) -> EvalReport:
    return EvalReport({name: confusion(predictions[name], truths[name]) for name in predictions})


def format_metric(value: float | None) -> str:
    return "undefined" if value is None else format(value, "#.4g")


def render_csv(report: EvalReport) -> str:
    lines = [f"# iotids-report {REPORT_VERSION}", CSV_HEADER]
    for name, cm in report.rows():
        m = metrics(cm) if cm.total else None
        vals = [format_metric(getattr(m, k)) if m else "undefined" for k in METRIC_NAMES]
        lines.append(f"{name},{cm.tp},{cm.fp},{cm.tn},{cm.fn}," + ",".join(vals))
    return "\n".join(lines) + "\n"


def render_text(report: EvalReport) -> str:
    out = []
    for name, cm in report.rows():
        m = metrics(cm) if cm.total else None
        out.append(f"[{name}]  n={cm.total}")
        out.append(f"{'':>16}{'pred attack':>12}{'pred normal':>12}")
        out.append(f"{'true attack':>16}{cm.tp:>12d}{cm.fn:>12d}")
        out.append(f"{'true normal':>16}{cm.fp:>12d}{cm.tn:>12d}")
        for f in fields(Metrics):
            val = getattr(m, f.name) if m else None
            out.append(f"{f.name:>16}  {format_metric(val)}")
        out.append("")
    return "\n".join(out)


def render_report(report: EvalReport) -> tuple[str, str]:
    """Fixed-width text and CSV renderings, deterministic for a given report."""
    return render_text(report), render_csv(report)
