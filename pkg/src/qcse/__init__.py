"""Quartered chirp spectral envelope (QCSE) features and a 1D-CNN classifier
for telling whispered from normal speech."""
from .chirp import ChirpConfig, chirp_spectrum, chirp_spectrum_oracle, chirp_weights, log_magnitude
from .features import FeatureMatrix, NormStats, Spectrogram, extract, quarter, spectrogram
from .noise import NoiseSpec, add_awgn, signal_power
from .signal_io import AudioBuffer, FrameConfig, frame_signal, make_window, read_wav, write_wav

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "ChirpConfig", "FeatureMatrix", "FrameConfig", "NoiseSpec", "NormStats",
    "Spectrogram", "add_awgn", "chirp_spectrum", "chirp_spectrum_oracle", "chirp_weights",
    "extract", "frame_signal", "log_magnitude", "make_window", "quarter", "read_wav",
    "signal_power", "spectrogram", "write_wav",
]
