"""Exit criteria for the toolkit, one test (or group) per criterion.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import contextlib
import io
import math
import time

import numpy as np
import pytest

from iotids import nn
from iotids.cli import main
from iotids.dataset import SplitSpec, class_counts, load_dataset, split, split_sizes
from iotids.evaluation import confusion, metrics
from iotids.features import Sample
from iotids.gradcheck import run_suite
from iotids.simulator import Kind, Phase, ScenarioConfig, simulate

from conftest import XOR_X, XOR_Y
from test_nn import HAND_CASES, hand_model

SEEDS = (0, 1, 2, 3, 4)
TARGET_N = 3305


def _path_flags(d):
    names = dict(trace="trace.csv", dataset="dataset.csv", model="model.txt", history="history.csv",
                 report_text="report.txt", report_csv="report.csv")
    flags = []
    for key, name in names.items():
        flags += ["--set", f"paths.{key}={d / name}"]
    return flags


@pytest.fixture(scope="module")
def pipeline_runs(tmp_path_factory):
    """Default-config pipeline for each seed: accuracy, runtime and artifact directory."""
    runs = {}
    for seed in SEEDS:
        d = tmp_path_factory.mktemp(f"seed{seed}")
        buf = io.StringIO()
        start = time.perf_counter()
        with contextlib.redirect_stdout(buf):
            code = main(["pipeline", "--seed", str(seed), *_path_flags(d)])
        elapsed = time.perf_counter() - start
        last = buf.getvalue().strip().splitlines()[-1]
        runs[seed] = dict(code=code, last=last, elapsed=elapsed, dir=d)
    return runs


@pytest.mark.criterion(1, "accuracy reproduction: overall accuracy >= 0.99 on 5 seeds, < 2 min each")
def test_accuracy_reproduction(pipeline_runs, record_property):
    accs = []
    for seed, run in pipeline_runs.items():
        assert run["code"] == 0
        key, _, value = run["last"].partition("=")
        assert key == "overall_accuracy"
        accs.append(float(value))
        samples = load_dataset(run["dir"] / "dataset.csv")
        parts = split(samples, SplitSpec(seed=seed))
        assert (len(parts.train), len(parts.val), len(parts.test)) == split_sizes(len(samples), SplitSpec())
    worst_time = max(r["elapsed"] for r in pipeline_runs.values())
    record_property("detail", "accuracies=" + ",".join(f"{a:.4f}" for a in accs) + f" max_runtime={worst_time:.1f}s")
    assert min(accs) >= 0.99
    assert worst_time < 120


@pytest.mark.criterion(2, "dataset calibration: attack fraction 0.6418 +/- 0.03, N within 5% of 3305")
def test_dataset_calibration(pipeline_runs, record_property):
    details = []
    for seed, run in pipeline_runs.items():
        samples = load_dataset(run["dir"] / "dataset.csv")
        n_attack, n_normal = class_counts(samples)
        n = n_attack + n_normal
        frac = n_attack / n
        details.append(f"seed{seed}:N={n},attack={frac:.4f}")
        assert abs(frac - 0.6418) <= 0.03
        assert abs(n - TARGET_N) <= 0.05 * TARGET_N
    record_property("detail", " ".join(details))


@pytest.mark.criterion(3, "split exactness: 3305 samples at 0.15/0.15 -> 2313/496/496")
@pytest.mark.parametrize("n_attack", [2121, 1653, 3000])
@pytest.mark.parametrize("stratified", [True, False])
def test_split_exactness(n_attack, stratified):
    samples = [Sample(np.full(6, float(i)), int(i < n_attack)) for i in range(TARGET_N)]
    parts = split(samples, SplitSpec(0.15, 0.15, seed=11, stratified=stratified))
    assert (len(parts.train), len(parts.val), len(parts.test)) == (2313, 496, 496)
    idx = np.concatenate([parts.train_idx, parts.val_idx, parts.test_idx])
    assert np.array_equal(np.sort(idx), np.arange(TARGET_N))


@pytest.mark.criterion(4, "gradient oracle: 100 random cases within rel 1e-5 (abs floor 1e-8), < 10 s")
def test_gradient_oracle(record_property):
    start = time.perf_counter()
    results = run_suite(seed=2024, n_cases=100)
    elapsed = time.perf_counter() - start
    worst = max(r.max_rel_err for r in results)
    record_property("detail", f"passed={sum(r.passed for r in results)}/100 max_rel_err={worst:.2e} "
                              f"runtime={elapsed:.2f}s")
    assert {r.layer_sizes for r in results} == {(2, 2, 1), (6, 3, 1), (4, 5, 3, 1)}
    assert all(r.passed for r in results)
    assert elapsed < 10


@pytest.mark.criterion(5, "forward-pass oracle: 3 hand-computed 6-3-1 instances agree to 1e-12")
@pytest.mark.parametrize("case", HAND_CASES)
def test_forward_oracle(case):
    trace = nn.forward(hand_model(case), case["x"])
    assert np.max(np.abs(trace.activations[1] - np.array(case["hidden"]))) <= 1e-12
    assert abs(trace.output[0] - case["out"]) <= 1e-12


@pytest.mark.criterion(6, "XOR learnability: 2-3-1, lr 0.5, train MSE < 0.05 within 20000 epochs")
def test_xor_learnability(record_property):
    cfg = nn.TrainConfig(learning_rate=0.5, max_epochs=20000, patience=20000, seed=0)
    result = nn.train(nn.init_params([2, 3, 1], 0), (XOR_X, XOR_Y), (XOR_X, XOR_Y), cfg)
    first = next(r.epoch for r in result.history if r.train_mse < 0.05)
    final = nn.mse_cost(result.model, (XOR_X, XOR_Y))
    record_property("detail", f"first epoch below 0.05: {first}, final MSE {final:.2e}")
    assert final < 0.05


@pytest.mark.criterion(7, "determinism: identical config -> byte-identical trace, dataset, model, report CSV")
def test_determinism(pipeline_runs, tmp_path):
    rerun = tmp_path / "rerun"
    rerun.mkdir()
    with contextlib.redirect_stdout(io.StringIO()):
        assert main(["pipeline", "--seed", "0", *_path_flags(rerun)]) == 0
    first = pipeline_runs[0]["dir"]
    for name in ("trace.csv", "dataset.csv", "model.txt", "report.csv"):
        assert (first / name).read_bytes() == (rerun / name).read_bytes(), name


@pytest.mark.criterion(8, "simulator statistics: 3x10000 pps x 60 s within 3 sigma of 1.8e6; no attackers -> no attack phase")
def test_simulator_statistics(record_property):
    cfg = ScenarioConfig(n_attackers=3, flood_rate_pps=10000, duration_s=100,
                         attack_start_s=20, attack_end_s=80, seed=123)
    trace = simulate(cfg)
    n_flood = int(np.sum(trace.kind == Kind.FLOOD))
    mean = 3 * 10000 * 60
    record_property("detail", f"flood={n_flood} (|dev|={abs(n_flood - mean)}, 3sigma={3 * math.sqrt(mean):.0f})")
    assert abs(n_flood - mean) <= 3 * math.sqrt(mean)

    quiet = simulate(ScenarioConfig(n_attackers=0, seed=123))
    assert not np.any(quiet.phase == Phase.ATTACK)
    assert not np.any(quiet.kind == Kind.FLOOD)


@pytest.mark.criterion(9, "degenerate baseline: all-attack predictor on the 2121/1184 class mix scores 0.6418 +/- 0.001")
def test_all_attack_baseline(record_property):
    truths = np.array([1] * 2121 + [0] * 1184)
    acc = metrics(confusion(np.ones_like(truths), truths)).accuracy
    record_property("detail", f"accuracy={acc:.6f}")
    assert abs(acc - 0.6418) <= 0.001
