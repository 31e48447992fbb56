import numpy as np
import pytest

from qcse.features import QCSE, FeatureMatrix
from qcse.model import (
    NORMAL,
    WHISPER,
    Checkpoint,
    EarlyStopping,
    Model,
    ModelConfig,
    ModelParams,
    TrainConfig,
    TrainingDivergedError,
    aggregate,
    predict_utterance,
    train,
)
from qcse.model.training import retain_best, split_train_val

SMALL = ModelConfig(input_bins=32, conv1_filters=4, conv1_kernel=5, conv2_filters=4,
                    conv2_kernel=3, dense_hidden=16)


def _separable(n_per_class, seed):
    r = np.random.default_rng(seed)
    bins = np.arange(32)
    items = []
    for i in range(n_per_class):
        comb = 10 * (np.cos(2 * np.pi * bins / 4) > 0.5)  # harmonic-like ridges
        items.append((FeatureMatrix(comb + r.standard_normal((6, 32)), QCSE, 1.01), NORMAL))
        items.append((FeatureMatrix(r.standard_normal((6, 32)), QCSE, 1.01), WHISPER))
    return items


def test_early_stopping_counts_strictly_worse_epochs():
    stop = EarlyStopping(3)
    assert not stop.update(1.0)
    assert [stop.update(v) for v in (1.1, 1.2, 1.3)] == [False, False, True]


def test_early_stopping_resets_on_improvement():
    stop = EarlyStopping(2)
    assert [stop.update(v) for v in (1.0, 1.0, 0.5, 0.6, 0.7)] == [False, False, False, False, True]


def test_retention_keeps_two_lowest(rng):
    kept = []
    losses = rng.uniform(0, 1, 20)
    for i, v in enumerate(losses):
        kept = retain_best(kept, Checkpoint(None, i, float(v)))
        assert len(kept) <= 2
        assert [c.val_loss for c in kept] == sorted(c.val_loss for c in kept)
    assert [c.val_loss for c in kept] == sorted(losses)[:2]


def test_aggregate_mean_example():
    probs = np.array([[0.1, 0.9], [0.2, 0.8], [0.3, 0.7]])
    label, score = aggregate(probs)
    assert label == WHISPER
    assert score[1] == pytest.approx(0.8, abs=1e-15)


def test_aggregate_tie_goes_to_normal():
    assert aggregate([[0.5, 0.5], [0.5, 0.5]])[0] == NORMAL


def test_predict_utterance_with_zero_weights_is_a_tie():
    zeros = ModelParams.zeros(SMALL)
    label, score = predict_utterance(zeros, np.ones((3, 32)), SMALL)
    assert label == NORMAL and score.tolist() == [0.5, 0.5]
    with pytest.raises(ValueError):
        predict_utterance(zeros, np.ones((0, 32)), SMALL)


def test_validation_split_is_per_class_and_seeded():
    labels = [0] * 20 + [1] * 30
    fit, val = split_train_val(labels, 0.1, 3)
    assert sorted(fit + val) == list(range(50))
    assert sum(labels[i] == 0 for i in val) == 2 and sum(labels[i] == 1 for i in val) == 3
    assert (fit, val) == split_train_val(labels, 0.1, 3)


def test_separable_data_learned_within_twenty_epochs():
    data = _separable(40, 0)
    result = train(data, SMALL, TrainConfig(max_epochs=20, batch_size=32, seed=1))
    assert len(result.log) <= 20
    assert 1 <= len(result.checkpoints) <= 2
    model = Model.from_checkpoint(result, 0)
    test = _separable(50, 99)
    acc = np.mean([model.predict(f)[0] == lab for f, lab in test])
    assert acc >= 0.99


def test_momentum_optimizer_reduces_loss():
    result = train(_separable(30, 1), SMALL,
                   TrainConfig(max_epochs=12, patience=12, optimizer="sgd_momentum",
                               learning_rate=0.01))
    losses = [e["train_loss"] for e in result.log]
    assert losses[-1] < losses[0] / 5


def test_training_is_deterministic():
    data = _separable(10, 2)
    cfg = TrainConfig(max_epochs=3, seed=5)
    a, b = train(data, SMALL, cfg), train(data, SMALL, cfg)
    assert a.log == b.log
    assert all(np.array_equal(x, y) for (_, x), (_, y) in zip(a.best.tensors(), b.best.tensors()))


def test_single_class_rejected():
    data = [(f, NORMAL) for f, lab in _separable(5, 0) if lab == NORMAL]
    with pytest.raises(ValueError, match="both classes"):
        train(data, SMALL, TrainConfig())


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported():
    data = [(FeatureMatrix(f.data * 1e6, QCSE, 1.01), lab) for f, lab in _separable(10, 0)]
    with pytest.raises(TrainingDivergedError, match="learning rate"):
        train(data, SMALL, TrainConfig(optimizer="sgd_momentum", learning_rate=1e12,
                                       max_epochs=5))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(patience=0)
    with pytest.raises(ValueError):
        TrainConfig(optimizer="rmsprop")
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)

