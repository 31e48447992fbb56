"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times each kernel at the shapes a batch of 64 frames produces in the default
network, then a short training run on a synthetic corpus per backend, with
and without flushing subnormals. Subnormal float32 values show up once the
classifier saturates, so the training rows are where the flush pays off.
"""
import argparse
import contextlib
import time
import timeit

import numpy as np

from qcse import kernels
from qcse.chirp import ChirpConfig
from qcse.corpus import SynthConfig, synth_normal, synth_whisper
from qcse.features import extract
from qcse.model import ModelConfig, TrainConfig, train
from qcse.signal_io import FrameConfig


def _time(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(repeat):
    r = np.random.default_rng(0)
    x1 = r.standard_normal((64, 128, 1)).astype(np.float32)
    x2 = r.standard_normal((64, 54, 32)).astype(np.float32)
    a1 = r.standard_normal((64, 109, 32)).astype(np.float32)
    cols2 = r.standard_normal((64, 45, 10, 32)).astype(np.float32)
    rows = []
    for name in ("python", "compiled"):
        try:
            mod = kernels.backend_module(name)
        except ImportError:
            continue
        pooled, arg = mod.maxpool(a1, 2)
        cases = {
            "im2col conv1": lambda: mod.im2col(x1, 20),
            "im2col conv2": lambda: mod.im2col(x2, 10),
            "col2im conv2": lambda: mod.col2im(cols2, 54),
            "maxpool": lambda: mod.maxpool(a1, 2),
            "maxpool backward": lambda: mod.maxpool_backward(pooled, arg, 2, 109),
        }
        for label, fn in cases.items():
            rows.append((label, name, _time(fn, repeat)))
    return rows


def _corpus(pairs):
    fcfg, ccfg = FrameConfig(), ChirpConfig()
    data = []
    for seed in range(pairs):
        cfg = SynthConfig(seed=seed)
        data.append((extract(synth_normal(cfg), fcfg, ccfg), 0))
        data.append((extract(synth_whisper(cfg), fcfg, ccfg), 1))
    return data


def training_rows(pairs, epochs):
    data = _corpus(pairs)
    tcfg = TrainConfig(max_epochs=epochs, patience=epochs)
    saved_impl, saved_flush = kernels._impl, kernels.flush_denormals
    rows = []
    try:
        for name in ("python", "compiled"):
            try:
                kernels._impl = kernels.backend_module(name)
            except ImportError:
                continue
            for flush in (False, True):
                kernels.flush_denormals = saved_flush if flush else contextlib.nullcontext
                start = time.perf_counter()
                train(data, ModelConfig(), tcfg)
                label = f"train {epochs} epochs" + (", subnormals flushed" if flush else "")
                rows.append((label, name, time.perf_counter() - start))
    finally:
        kernels._impl, kernels.flush_denormals = saved_impl, saved_flush
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--pairs", type=int, default=60, help="synthetic utterance pairs")
    ap.add_argument("--epochs", type=int, default=8)
    args = ap.parse_args()
    rows = kernel_rows(args.repeat) + training_rows(args.pairs, args.epochs)
    base = {label: t for label, name, t in rows if name == "python"}
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'case':<38}{'backend':<10}{'ms':>11}{'vs python':>11}")
    for label, name, t in rows:
        ref = base.get(label.split(",")[0])
        speed = f"{ref / t:.2f}x" if ref else ""
        print(f"{label:<38}{name:<10}{t * 1e3:>11.3f}{speed:>11}")


if __name__ == "__main__":
    main()
