"""Frame-level training with early stopping, and utterance-level scoring."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..features import FeatureMatrix, NormStats, apply_norm, fit_norm
from ..rng import derive_seed
from .network import ModelConfig, ModelParams, forward, init_params, loss_and_grad

log = logging.getLogger(__name__)

NORMAL, WHISPER = 0, 1
LABELS = ("normal", "whisper")
OPTIMIZERS = ("adaptive_moment", "sgd_momentum")


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 50
    patience: int = 3
    seed: int = 0
    optimizer: str = "adaptive_moment"
    val_fraction: float = 0.1
    momentum: float = 0.9

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.max_epochs <= 0:
            raise ValueError("learning rate, batch size and max epochs must be positive")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must lie in (0, 1)")


@dataclass
class Checkpoint:
    params: ModelParams
    epoch: int
    val_loss: float


@dataclass
class TrainResult:
    best: ModelParams
    checkpoints: list
    log: list
    norm: NormStats
    config: ModelConfig


class EarlyStopping:
    """Stop once ``patience`` epochs pass without a strictly lower loss."""

    def __init__(self, patience):
        self.patience = patience
        self.best = math.inf
        self.stale = 0

    def update(self, loss) -> bool:
        """Record one epoch's loss; return True when training should stop."""
        if loss < self.best:
            self.best = loss
            self.stale = 0
        else:
            self.stale += 1
        return self.stale >= self.patience


def retain_best(checkpoints, candidate, keep=2):
    """Insert ``candidate`` and keep the ``keep`` lowest-loss checkpoints (stable)."""
    merged = sorted(checkpoints + [candidate], key=lambda c: c.val_loss)
    return merged[:keep]


class _Adam:
    def __init__(self, params, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.tensors()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for name, g in grads.tensors():
            m, v = self.m[name], self.v[name]
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            w = getattr(params, name)
            w -= (self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)).astype(w.dtype)


class _Momentum:
    def __init__(self, params, lr, momentum):
        self.lr, self.mu = lr, momentum
        self.vel = {k: np.zeros_like(v) for k, v in params.tensors()}

    def step(self, params, grads):
        for name, g in grads.tensors():
            vel = self.vel[name]
            vel *= self.mu
            vel -= self.lr * g
            getattr(params, name)[...] += vel


def split_train_val(labels, fraction, seed):
    """Hold out ``fraction`` of utterances per class (at least one each)."""
    labels = np.asarray(labels)
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "val-split")))
    val = []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        n_val = max(1, int(round(fraction * len(idx))))
        if n_val >= len(idx):
            raise ValueError(f"class {cls} has too few utterances to hold out a validation set")
        val.extend(rng.permutation(idx)[:n_val].tolist())
    val = sorted(val)
    fit = sorted(set(range(len(labels))) - set(val))
    return fit, val


def _stack(items, norm, dtype):
    x = np.concatenate([apply_norm(f, norm).data for f, _ in items]).astype(dtype)
    y = np.concatenate([np.full(f.n_frames, lab, dtype=np.intp) for f, lab in items])
    return x, y


def _eval_batch(params, x, y, cfg):
    probs = forward(params, x, cfg).astype(np.float64)
    p = np.clip(probs[np.arange(len(y)), y], 1e-300, None)
    acc = float(np.mean(probs.argmax(axis=1) == y))
    return float(-np.mean(np.log(p))), acc


def train(dataset, mcfg: ModelConfig, tcfg: TrainConfig, dtype=np.float32) -> TrainResult:
    """Train on ``dataset``, a sequence of ``(FeatureMatrix, label)`` utterances.

    Frames inherit their utterance's label. A per-class ``val_fraction`` of
    utterances drives early stopping; normalization is fitted on the rest.
    """
    dataset = list(dataset)
    labels = [lab for _, lab in dataset]
    if len(set(labels)) < 2:
        raise ValueError("training data must contain both classes")
    fit_idx, val_idx = split_train_val(labels, tcfg.val_fraction, tcfg.seed)
    fit_items = [dataset[i] for i in fit_idx]
    val_items = [dataset[i] for i in val_idx]
    norm = fit_norm([f for f, _ in fit_items])
    x, y = _stack(fit_items, norm, dtype)
    xv, yv = _stack(val_items, norm, dtype)

    params = init_params(mcfg, derive_seed(tcfg.seed, "init"), dtype)
    if tcfg.optimizer == "adaptive_moment":
        opt = _Adam(params, tcfg.learning_rate)
    else:
        opt = _Momentum(params, tcfg.learning_rate, tcfg.momentum)
    rng = np.random.Generator(np.random.PCG64(derive_seed(tcfg.seed, "shuffle")))
    stopper = EarlyStopping(tcfg.patience)
    checkpoints, history = [], []

    with kernels.flush_denormals():
        for epoch in range(1, tcfg.max_epochs + 1):
            order = rng.permutation(len(x))
            run_loss = 0.0
            for s in range(0, len(order), tcfg.batch_size):
                b = order[s:s + tcfg.batch_size]
                loss, grads = loss_and_grad(params, x[b], y[b], mcfg)
                if not math.isfinite(loss):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}, batch {s // tcfg.batch_size}; "
                        f"try a lower learning rate than {tcfg.learning_rate}")
                opt.step(params, grads)
                run_loss += loss * len(b)
            val_loss, val_acc = _evaluate(params, xv, yv, mcfg)
            if not math.isfinite(val_loss):
                raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
            entry = {"epoch": epoch, "train_loss": run_loss / len(x),
                     "val_loss": val_loss, "val_acc": val_acc}
            history.append(entry)
            log.info("epoch %d train %.5f val %.5f acc %.4f", epoch, entry["train_loss"],
                     val_loss, val_acc)
            checkpoints = retain_best(checkpoints, Checkpoint(params.copy(), epoch, val_loss))
            if stopper.update(val_loss):
                break
    return TrainResult(checkpoints[0].params, checkpoints, history, norm, mcfg)


def _evaluate(params, x, y, cfg, chunk=1024):
    loss_sum, hits = 0.0, 0.0
    for s in range(0, len(x), chunk):
        l, a = _eval_batch(params, x[s:s + chunk], y[s:s + chunk], cfg)
        n = len(x[s:s + chunk])
        loss_sum += l * n
        hits += a * n
    return loss_sum / len(x), hits / len(x)


def predict_utterance(params: ModelParams, features, cfg: ModelConfig):
    """Average frame probabilities; return ``(label, mean probability vector)``.

    Exact ties go to class 0 (normal).
    """
    data = features.data if isinstance(features, FeatureMatrix) else np.asarray(features)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("need at least one frame to score an utterance")
    return aggregate(forward(params, data, cfg))


def aggregate(frame_probs):
    """Mean of per-frame probability rows, then argmax (first maximum on ties)."""
    score = np.asarray(frame_probs, dtype=np.float64).mean(axis=0)
    return int(np.argmax(score)), score


@dataclass
class Model:
    """Everything needed to score utterances: geometry, weights, normalization."""

    config: ModelConfig
    params: ModelParams
    norm: NormStats | None = None
    epoch: int = 0
    val_loss: float = float("nan")
    name: str = field(default="model", compare=False)

    def predict(self, features: FeatureMatrix):
        if self.norm is not None:
            features = apply_norm(features, self.norm)
        return predict_utterance(self.params, features, self.config)

    @classmethod
    def from_checkpoint(cls, result: TrainResult, rank: int):
        c = result.checkpoints[rank]
        return cls(result.config, c.params, result.norm, c.epoch, c.val_loss)
