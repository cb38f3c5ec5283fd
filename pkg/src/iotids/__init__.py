"""Simulated IoT UDP-flood detection with a from-scratch multilayer perceptron."""

from .dataset import SplitSpec, class_counts, load_dataset, save_dataset, split
from .evaluation import ConfusionMatrix, EvalReport, confusion, metrics, render_report
from .features import Sample, WindowSpec, apply_normalization, extract_windows, fit_normalization
from .nn import MlpModel, TrainConfig, forward, init_params, load_model, predict, save_model, train
from .simulator import ScenarioConfig, Trace, read_trace, simulate, write_trace

__version__ = "0.1.0"
