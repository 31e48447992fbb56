"""Utterance-level scoring: confusion counts, precision/recall/F1, accuracy."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

CLASS_NAMES = ("normal", "whisper")
CSV_FIELDS = ("feature", "radius", "snr_db", "class", "precision", "recall", "f1", "accuracy")


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class ConfusionCounts:
    """One-vs-rest counts for each class; ``per_class[i]`` treats class ``i`` as positive."""

    per_class: tuple
    total: int

    @property
    def correct(self):
        # every correct utterance is a true positive of exactly one class
        return sum(c.tp for c in self.per_class)


def confusion(predictions, truths, n_classes=2) -> ConfusionCounts:
    pred = np.asarray(predictions, dtype=np.intp)
    true = np.asarray(truths, dtype=np.intp)
    if pred.shape != true.shape:
        raise ValueError(f"{pred.size} predictions for {true.size} truths")
    if pred.size == 0:
        raise ValueError("cannot score an empty set")
    per = []
    for c in range(n_classes):
        tp = int(np.sum((pred == c) & (true == c)))
        fp = int(np.sum((pred == c) & (true != c)))
        fn = int(np.sum((pred != c) & (true == c)))
        per.append(ClassCounts(tp, fp, fn, int(pred.size) - tp - fp - fn))
    return ConfusionCounts(tuple(per), int(pred.size))


@dataclass
class MetricsReport:
    precision: tuple
    recall: tuple
    f1: tuple
    accuracy: float
    flags: list = field(default_factory=list)
    feature: str = ""
    radius: float = math.nan
    snr_db: float | None = None
    dataset: str = ""
    label: str = ""


def _ratio(num, den, what, flags):
    if den == 0:
        flags.append(what)
        return 0.0
    return num / den


def metrics(c: ConfusionCounts, **meta) -> MetricsReport:
    """Degenerate ratios are reported as 0.0 and named in ``flags``."""
    flags = []
    pre, rec, f1 = [], [], []
    for name, k in zip(CLASS_NAMES, c.per_class):
        p = _ratio(k.tp, k.tp + k.fp, f"{name}: no predicted positives", flags)
        r = _ratio(k.tp, k.tp + k.fn, f"{name}: no actual positives", flags)
        f = _ratio(2 * p * r, p + r, f"{name}: precision and recall both zero", flags)
        pre.append(p)
        rec.append(r)
        f1.append(f)
    acc = c.correct / c.total
    return MetricsReport(tuple(pre), tuple(rec), tuple(f1), acc, flags, **meta)


def _snr_text(snr):
    return "clean" if snr is None else f"{snr:g}"


def render_report(reports) -> str:
    """Fixed-width table with per-class Pre/Re/F1 and accuracy to 4 decimals."""
    group = f"{'Pre':>6} {'Re':>6} {'F1':>6}"
    head1 = f"{'':<32}{'':>7}  {'Normal':^20}  {'Whisper':^20}"
    head2 = f"{'Feature':<32}{'SNR':>7}  {group}  {group}  {'Acc':>6}"
    lines = [head1, head2, "-" * len(head2)]
    for r in reports:
        name = r.feature + (f" r={r.radius:g}" if not math.isnan(r.radius) else "")
        if r.label:
            name += f" {r.label}"
        cells = []
        for i in range(2):
            cells.append(f"{r.precision[i]:.4f} {r.recall[i]:.4f} {r.f1[i]:.4f}")
        lines.append(f"{name:<32}{_snr_text(r.snr_db):>7}  {cells[0]}  {cells[1]}  "
                     f"{r.accuracy:.4f}")
    return "\n".join(lines) + "\n"


def report_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        for i, cls in enumerate(CLASS_NAMES):
            w.writerow([r.feature, f"{r.radius:g}", _snr_text(r.snr_db), cls,
                        f"{r.precision[i]:.6f}", f"{r.recall[i]:.6f}", f"{r.f1[i]:.6f}",
                        f"{r.accuracy:.6f}"])
    return buf.getvalue()
