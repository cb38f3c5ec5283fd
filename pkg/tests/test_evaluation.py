import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iotids.errors import InvalidInputError
from iotids.evaluation import (
    CSV_HEADER, ConfusionMatrix, EvalReport, build_report, confusion, metrics, render_report,
)

labels = st.lists(st.integers(0, 1), min_size=1, max_size=200)


def test_perfect_predictions():
    t = [1, 0, 1, 1, 0]
    cm = confusion(t, t)
    assert cm.fp == cm.fn == 0
    m = metrics(cm)
    assert (m.accuracy, m.precision, m.recall, m.f1, m.fpr) == (1.0, 1.0, 1.0, 1.0, 0.0)


def test_complement_predictions():
    t = np.array([1, 0, 1, 1, 0])
    cm = confusion(1 - t, t)
    assert cm.tp == cm.tn == 0


def test_all_attack_predictor_on_table_proportions():
    truths = [1] * 2121 + [0] * 1184
    m = metrics(confusion([1] * 3305, truths))
    assert m.accuracy == pytest.approx(2121 / 3305, abs=1e-15)
    assert m.accuracy == pytest.approx(0.6418, abs=0.001)


def test_symmetric_matrix_metrics():
    m = metrics(ConfusionMatrix(1, 1, 1, 1))
    assert (m.accuracy, m.precision, m.recall) == (0.5, 0.5, 0.5)


def test_undefined_metrics():
    m = metrics(ConfusionMatrix(tp=0, fp=0, tn=5, fn=2))
    assert m.precision is None
    assert m.f1 is None
    assert m.recall == 0.0
    with pytest.raises(InvalidInputError):
        metrics(ConfusionMatrix())


def test_confusion_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        confusion([1, 0], [1])
    with pytest.raises(InvalidInputError):
        confusion([2], [1])


@given(st.data())
def test_confusion_permutation_invariant(data):
    t = data.draw(labels)
    p = data.draw(st.lists(st.integers(0, 1), min_size=len(t), max_size=len(t)))
    perm = data.draw(st.permutations(range(len(t))))
    cm = confusion(p, t)
    assert cm == confusion([p[i] for i in perm], [t[i] for i in perm])
    assert cm.total == len(t)
    assert 0.0 <= metrics(cm).accuracy <= 1.0


def _report():
    preds = {"train": [1, 1, 0, 0, 1], "validation": [1, 0], "test": [0, 0, 1]}
    truths = {"train": [1, 0, 0, 0, 1], "validation": [1, 0], "test": [1, 0, 1]}
    return build_report(preds, truths)


def test_all_matrix_is_sum_of_splits():
    report = _report()
    whole = confusion([1, 1, 0, 0, 1, 1, 0, 0, 0, 1], [1, 0, 0, 0, 1, 1, 0, 1, 0, 1])
    assert report.all == whole


def test_render_report_deterministic_and_formatted():
    text1, csv1 = render_report(_report())
    text2, csv2 = render_report(_report())
    assert (text1, csv1) == (text2, csv2)
    lines = csv1.splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == CSV_HEADER
    rows = lines[2:]
    assert [r.split(",")[0] for r in rows] == ["train", "validation", "test", "all"]
    assert rows[1].split(",")[5] == "1.000"
    assert rows[0].split(",")[5] == "0.8000"
    assert "true attack" in text1


def test_render_undefined_token():
    report = EvalReport({"train": ConfusionMatrix(tn=3), "validation": ConfusionMatrix(tn=1),
                         "test": ConfusionMatrix(tn=1)})
    _, csv = render_report(report)
    assert "undefined" in csv.splitlines()[2]
