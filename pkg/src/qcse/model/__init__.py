"""1D-CNN classifier over quartered spectral envelopes."""
from .io import ModelFormatError, decode_model, encode_model, load_model, save_model
from .network import (
    ModelConfig,
    ModelParams,
    forward,
    init_params,
    loss_and_grad,
    param_count,
)
from .training import (
    LABELS,
    NORMAL,
    WHISPER,
    Checkpoint,
    EarlyStopping,
    Model,
    TrainConfig,
    TrainingDivergedError,
    TrainResult,
    aggregate,
    predict_utterance,
    train,
)

__all__ = [
    "Checkpoint", "EarlyStopping", "LABELS", "Model", "ModelConfig", "ModelFormatError",
    "ModelParams", "NORMAL", "TrainConfig", "TrainResult", "TrainingDivergedError",
    "WHISPER", "aggregate", "decode_model", "encode_model", "forward", "init_params", "load_model",
    "loss_and_grad", "param_count", "predict_utterance", "save_model", "train",
]
