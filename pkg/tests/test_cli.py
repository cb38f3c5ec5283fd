import pytest

from iotids import nn
from iotids.cli import main
from iotids.config import build_config, load_config, parse_kv_text
from iotids.dataset import load_dataset
from iotids.errors import ConfigError, ParseError
from iotids.simulator import read_trace

SMALL = [
    "--set", "scenario.duration_s=60", "--set", "scenario.attack_start_s=15",
    "--set", "scenario.attack_end_s=45", "--set", "scenario.flood_rate_pps=100",
    "--set", "train.max_epochs=30",
]


def paths(tmp_path):
    return [
        "--set", f"paths.trace={tmp_path}/trace.csv", "--set", f"paths.dataset={tmp_path}/data.csv",
        "--set", f"paths.model={tmp_path}/model.txt", "--set", f"paths.history={tmp_path}/hist.csv",
        "--set", f"paths.report_text={tmp_path}/report.txt", "--set", f"paths.report_csv={tmp_path}/report.csv",
    ]


def test_stepwise_commands(tmp_path, capsys):
    common = SMALL + paths(tmp_path)
    assert main(["simulate", *common]) == 0
    trace = read_trace(tmp_path / "trace.csv")
    assert main(["extract", *common]) == 0
    samples = load_dataset(tmp_path / "data.csv")
    assert 100 <= len(samples) <= 120
    assert sum(s.label for s in samples) == 60
    assert main(["train", *common]) == 0
    assert nn.load_model(tmp_path / "model.txt").layer_sizes == (6, 3, 1)
    assert (tmp_path / "hist.csv").read_text().startswith("epoch,train_mse,val_mse\n")
    assert main(["evaluate", *common]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[-1].startswith("overall_accuracy=")
    assert (tmp_path / "report.csv").read_text().count("\n") == 6
    # inputs untouched
    assert read_trace(tmp_path / "trace.csv") == trace


def test_explicit_path_flags(tmp_path):
    assert main(["simulate", *SMALL, "--out", str(tmp_path / "t.csv")]) == 0
    assert main(["extract", *SMALL, "--trace", str(tmp_path / "t.csv"), "--out", str(tmp_path / "d.csv")]) == 0
    assert (tmp_path / "d.csv").exists()


def test_pipeline_last_line_and_determinism(tmp_path, capsys):
    for run in ("a", "b"):
        (tmp_path / run).mkdir()
        assert main(["pipeline", "--seed", "3", *SMALL, *paths(tmp_path / run)]) == 0
        last = capsys.readouterr().out.strip().splitlines()[-1]
        assert last.startswith("overall_accuracy=")
    for name in ("trace.csv", "data.csv", "model.txt", "report.csv", "report.txt", "hist.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    cfg_file.write_text("# experiment\ntrain.learning_rate = 0.3\nscenario.n_attackers=1\n")
    cfg = load_config(cfg_file, {"train.learning_rate": "0.2"}, seed=9)
    assert cfg.train.learning_rate == 0.2
    assert cfg.scenario.n_attackers == 1
    assert cfg.scenario.seed == cfg.split.seed == cfg.train.seed == 9
    assert cfg.layer_sizes == (6, 3, 1)


def test_shipped_default_matches_dataclass_defaults():
    cfg = load_config()
    fresh = build_config({})
    assert cfg.scenario == fresh.scenario
    assert cfg.train == fresh.train
    assert cfg.window == fresh.window and cfg.split == fresh.split


@pytest.mark.parametrize("values, field", [
    ({"train.learning_rate": "0"}, "train.learning_rate"),
    ({"scenario.flood_rate_pps": "abc"}, "scenario.flood_rate_pps"),
    ({"scenario.bogus": "1"}, "scenario.bogus"),
    ({"nonsense": "1"}, "nonsense"),
    ({"paths.model": "same.txt", "paths.dataset": "same.txt"}, "paths.model"),
])
def test_config_errors_name_field(values, field):
    with pytest.raises(ConfigError) as err:
        build_config(values)
    assert field in str(err.value)


def test_kv_parse_errors():
    with pytest.raises(ParseError) as err:
        parse_kv_text("a.b=1\njunk\n")
    assert err.value.line == 2


def _single_error_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: ")
    return err[0]


def test_missing_file_error(tmp_path, capsys):
    code = main(["extract", "--trace", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "d.csv")])
    assert code != 0
    line = _single_error_line(capsys)
    assert "missing-file" in line and "nope.csv" in line


def test_config_violation_error(capsys):
    assert main(["simulate", "--set", "scenario.attack_end_s=99999"]) != 0
    assert "scenario.attack_window" in _single_error_line(capsys)


def test_parse_failure_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp,src_role,src_idx,dst_role,dst_idx,size_bytes,kind,phase\n1.0,x\n")
    assert main(["extract", "--trace", str(bad), "--out", str(tmp_path / "d.csv")]) != 0
    assert f"{bad}:2:" in _single_error_line(capsys)


def test_check_gradients_command(capsys):
    assert main(["check-gradients", "--seed", "5", "--cases", "12"]) == 0
    assert capsys.readouterr().out.strip().splitlines()[-1].startswith("check-gradients pass: 12/12")
