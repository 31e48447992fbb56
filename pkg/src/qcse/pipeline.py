"""Batch stages shared by the CLI and the end-to-end tests."""
from __future__ import annotations

import csv
import dataclasses
import logging
import os
from concurrent.futures import ProcessPoolExecutor

from .chirp import ChirpConfig
from .corpus import LABEL_NAMES, load_manifest
from .evaluation import confusion, metrics
from .features import extract, read_features, write_features
from .model import Model, ModelConfig, TrainConfig, save_model, train
from .noise import NoiseSpec, add_awgn
from .rng import derive_seed
from .signal_io import FrameConfig, read_wav

log = logging.getLogger(__name__)

INDEX_NAME = "features.csv"
INDEX_FIELDS = ("feature", "label", "split", "source", "snr_db")


class PipelineError(RuntimeError):
    """Some items of a batch failed; ``failures`` maps item to message."""

    def __init__(self, stage, failures):
        self.failures = failures
        lines = "\n".join(f"  {k}: {v}" for k, v in failures.items())
        super().__init__(f"{stage}: {len(failures)} item(s) failed\n{lines}")


def worker_count():
    raw = os.environ.get("QCSE_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"QCSE_WORKERS must be an integer, got {raw!r}") from None
    return max(1, n)


def run_parallel(fn, jobs, stage):
    """Apply ``fn`` to each job, preserving order; collect every failure before raising."""
    n = worker_count()
    results, failures = [], {}
    if n == 1 or len(jobs) < 2:
        outcomes = (_guard(fn, j) for j in jobs)
        pairs = zip(jobs, outcomes)
    else:
        with ProcessPoolExecutor(n) as ex:
            pairs = list(zip(jobs, ex.map(_guard, [fn] * len(jobs), jobs)))
    for job, (ok, value) in pairs:
        if ok:
            results.append(value)
        else:
            failures[str(job[0])] = value
    if failures:
        raise PipelineError(stage, failures)
    return results


def _guard(fn, job):
    try:
        return True, fn(job)
    except Exception as exc:  # noqa: BLE001  (reported per item)
        return False, f"{type(exc).__name__}: {exc}"


def noise_seed(master, source):
    return derive_seed(master, "noise", os.path.basename(source))


def load_audio(source, snr_db=None, seed=0):
    buf = read_wav(source)
    if snr_db is not None:
        buf = add_awgn(buf, NoiseSpec(snr_db, noise_seed(seed, source)))
    return buf


def _extract_one(job):
    source, target, fcfg, ccfg, snr_db, seed = job
    feats = extract(load_audio(source, snr_db, seed), fcfg, ccfg)
    write_features(target, feats)
    return target


def extract_manifest(manifest, out_dir, fcfg: FrameConfig, ccfg: ChirpConfig,
                     snr_db=None, seed=0) -> str:
    """Extract features for every manifest row; write files plus ``features.csv``."""
    entries = load_manifest(manifest)
    os.makedirs(out_dir, exist_ok=True)
    jobs, rows = [], []
    for i, e in enumerate(entries):
        rel = os.path.join(e.split, e.label,
                           f"{i:05d}_{os.path.splitext(os.path.basename(e.path))[0]}.qcf")
        os.makedirs(os.path.join(out_dir, e.split, e.label), exist_ok=True)
        jobs.append((e.path, os.path.join(out_dir, rel), fcfg, ccfg, snr_db, seed))
        rows.append((rel, e.label, e.split, e.path, "" if snr_db is None else repr(snr_db)))
    run_parallel(_extract_one, jobs, "extract")
    index = os.path.join(out_dir, INDEX_NAME)
    with open(index, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(INDEX_FIELDS)
        w.writerows(rows)
    return index


@dataclasses.dataclass
class FeatureItem:
    features: object
    label: int
    split: str
    source: str
    snr_db: float | None


def load_index(path):
    """Read a ``features.csv`` written by :func:`extract_manifest`."""
    if os.path.isdir(path):
        path = os.path.join(path, INDEX_NAME)
    base = os.path.dirname(os.path.abspath(path))
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != INDEX_FIELDS:
            raise ValueError(f"{path}: not a feature index (header {reader.fieldnames})")
        items = []
        for row in reader:
            feats = read_features(os.path.join(base, row["feature"]))
            snr = float(row["snr_db"]) if row["snr_db"] else None
            items.append(FeatureItem(feats, LABEL_NAMES.index(row["label"]), row["split"],
                                     row["source"], snr))
    if not items:
        raise ValueError(f"{path}: feature index is empty")
    return items


def train_items(items, mcfg: ModelConfig, tcfg: TrainConfig):
    data = [(it.features, it.label) for it in items if it.split == "train"]
    if not data:
        raise ValueError("no training-split items in the feature index")
    bins = {f.n_bins for f, _ in data}
    if len(bins) != 1:
        raise ValueError(f"training features disagree on bin count: {sorted(bins)}")
    mcfg = dataclasses.replace(mcfg, input_bins=bins.pop())
    return train(data, mcfg, tcfg)


CHECKPOINT_FILES = ("model_best.qcm", "model_second.qcm")


def save_training(result, out_dir):
    """Write retained checkpoints (lowest loss first) and ``train_log.csv``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for rank, name in enumerate(CHECKPOINT_FILES[: len(result.checkpoints)]):
        p = os.path.join(out_dir, name)
        save_model(p, Model.from_checkpoint(result, rank))
        paths.append(p)
    with open(os.path.join(out_dir, "train_log.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("epoch", "train_loss", "val_loss", "val_acc"))
        for e in result.log:
            w.writerow((e["epoch"], repr(e["train_loss"]), repr(e["val_loss"]),
                        repr(e["val_acc"])))
    return paths


def evaluate_model(model: Model, items, dataset="", label=""):
    test = [it for it in items if it.split == "test"]
    if not test:
        raise ValueError("no test-split items in the feature index")
    preds = [model.predict(it.features)[0] for it in test]
    truths = [it.label for it in test]
    first = test[0]
    return metrics(confusion(preds, truths), feature=first.features.feature_kind,
                   radius=first.features.radius, snr_db=first.snr_db, dataset=dataset,
                   label=label or model.name)


def evaluate_checkpoints(models, items, dataset=""):
    """One report per model, plus a copy of the most accurate marked best-of-two."""
    reports = [evaluate_model(m, items, dataset) for m in models]
    if len(reports) > 1:
        best = max(reports, key=lambda r: r.accuracy)
        reports.append(dataclasses.replace(best, label="best-of-two"))
    return reports
