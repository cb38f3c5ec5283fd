"""End-to-end experiment steps shared by the CLI commands."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import nn
from .config import PipelineConfig
from .dataset import Split, SplitSpec, load_dataset, save_dataset, split
from .evaluation import EvalReport, build_report, render_report
from .features import NormalizationStats, Sample, apply_normalization, extract_windows, fit_normalization, stack
from .simulator import simulate, write_trace

log = logging.getLogger(__name__)


@dataclass
class PreparedData:
    split: Split
    stats: NormalizationStats
    train: list[Sample]
    val: list[Sample]
    test: list[Sample]


def prepare(samples: Sequence[Sample], spec: SplitSpec) -> PreparedData:
    """Split raw samples, then normalize all three splits with training-split statistics."""
    parts = split(samples, spec)
    stats = fit_normalization(parts.train)
    return PreparedData(
        parts, stats,
        apply_normalization(parts.train, stats),
        apply_normalization(parts.val, stats),
        apply_normalization(parts.test, stats),
    )


def train_model(data: PreparedData, layer_sizes, config: nn.TrainConfig) -> nn.TrainResult:
    init = nn.init_params(layer_sizes, config.seed)
    return nn.train(init, data.train, data.val, config)


def evaluate_model(model: nn.MlpModel, data: PreparedData, threshold: float) -> EvalReport:
    preds, truths = {}, {}
    for name, part in (("train", data.train), ("validation", data.val), ("test", data.test)):
        X, y = stack(part)
        preds[name] = nn.predict_batch(model, X, threshold) if len(y) else []
        truths[name] = y
    return build_report(preds, truths)


def write_report(report: EvalReport, text_path, csv_path) -> None:
    text, csv = render_report(report)
    Path(text_path).write_text(text)
    Path(csv_path).write_text(csv)


def _ensure_parent(path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def run_pipeline(cfg: PipelineConfig) -> EvalReport:
    """Simulate, extract, split, train and evaluate, writing every artifact in ``cfg.paths``."""
    paths = cfg.paths
    for p in (paths.trace, paths.dataset, paths.model, paths.history, paths.report_text, paths.report_csv):
        _ensure_parent(p)

    trace = simulate(cfg.scenario)
    log.info("simulated %d packets", len(trace))
    write_trace(trace, paths.trace)

    samples = extract_windows(trace, cfg.window)
    del trace
    save_dataset(samples, paths.dataset, cfg.window)
    # Re-read so training sees exactly what the dataset file holds.
    samples = load_dataset(paths.dataset)
    log.info("extracted %d windows", len(samples))

    data = prepare(samples, cfg.split)
    result = train_model(data, cfg.layer_sizes, cfg.train)
    log.info("trained %d epochs, best epoch %d", len(result.history), result.best_epoch)
    nn.save_model(result.model, paths.model)
    nn.write_history(result.history, paths.history)

    report = evaluate_model(result.model, data, cfg.train.threshold)
    write_report(report, paths.report_text, paths.report_csv)
    return report
