import csv
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcse.evaluation import confusion, metrics, render_report, report_csv


def _preds(tp, fp, fn, tn):
    # class 1 positive
    pred = [1] * tp + [1] * fp + [0] * fn + [0] * tn
    true = [1] * tp + [0] * fp + [1] * fn + [0] * tn
    return pred, true


def test_closed_form_example():
    c = confusion(*_preds(9, 1, 3, 7))
    k = c.per_class[1]
    assert (k.tp, k.fp, k.fn, k.tn) == (9, 1, 3, 7)
    r = metrics(c)
    assert r.precision[1] == pytest.approx(0.9)
    assert r.recall[1] == pytest.approx(0.75)
    assert round(r.f1[1], 4) == 0.8182
    assert r.accuracy == pytest.approx(16 / 20)
    assert r.flags == []


def test_perfect_and_degenerate():
    r = metrics(confusion([0, 0, 1], [0, 0, 1]))
    assert r.accuracy == 1 and r.f1 == (1.0, 1.0)
    d = metrics(confusion([0, 0, 0], [0, 0, 0]))
    assert d.precision[1] == 0.0 and d.recall[1] == 0.0 and d.f1[1] == 0.0
    assert any("no predicted positives" in f for f in d.flags)
    assert any("no actual positives" in f for f in d.flags)


def test_bad_inputs():
    with pytest.raises(ValueError):
        confusion([0, 1], [0])
    with pytest.raises(ValueError):
        confusion([], [])


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_swapping_arguments_transposes(pairs):
    pred, true = zip(*pairs)
    a, b = metrics(confusion(pred, true)), metrics(confusion(true, pred))
    assert a.precision == b.recall and a.recall == b.precision
    assert a.accuracy == b.accuracy


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_counts_partition_the_set(pairs):
    pred, true = zip(*pairs)
    c = confusion(pred, true)
    for k in c.per_class:
        assert k.tp + k.fp + k.fn + k.tn == c.total
    assert c.correct == sum(p == t for p, t in pairs)


def _reports():
    a = metrics(confusion(*_preds(9, 1, 3, 7)), feature="QCSE", radius=1.01, snr_db=5.0,
                label="model_best.qcm")
    b = metrics(confusion([0, 1], [0, 1]), feature="QSE", radius=1.0, snr_db=None)
    return [a, b]


def test_render_report_columns_align():
    lines = render_report(_reports()).splitlines()
    assert "Normal" in lines[0] and "Whisper" in lines[0]
    assert "Pre" in lines[1] and "Acc" in lines[1]
    assert len({len(line) for line in lines[1:]}) == 1
    assert "0.8000" in lines[3] and "clean" in lines[4]


def test_report_csv_rows():
    rows = list(csv.DictReader(io.StringIO(report_csv(_reports()))))
    assert len(rows) == 4
    assert rows[1]["class"] == "whisper" and rows[1]["precision"] == "0.900000"
    assert rows[2]["snr_db"] == "clean" and rows[0]["radius"] == "1.01"


def test_accuracy_matches_numpy(rng):
    p, t = rng.integers(0, 2, 500), rng.integers(0, 2, 500)
    assert metrics(confusion(p, t)).accuracy == np.mean(p == t)
