"""Command-line entry point: ``qcse {synth,extract,corrupt,train,eval,inspect}``."""
from __future__ import annotations

import argparse
import csv
import glob
import logging
import os
import sys

import numpy as np

from . import pipeline
from .chirp import LOG_FLOOR, ChirpConfig, chirp_spectrum, chirp_spectrum_oracle
from .config import RunConfig, load_config
from .corpus import build_synthetic_corpus
from .evaluation import render_report, report_csv
from .features import extract
from .model import load_model, param_count
from .noise import NoiseSpec, add_awgn
from .signal_io import frame_signal, read_wav, write_wav

log = logging.getLogger("qcse")


class CommandError(Exception):
    pass


def _config(args, **sections) -> RunConfig:
    cfg = load_config(args.config)
    return cfg.override(seed=args.seed, **sections)


def _echo_config(cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    cfg.dump(os.path.join(out_dir, "run_config.json"))


def _frame_overrides(args):
    return dict(frame_len=args.frame_len, hop=args.hop, window=args.window)


def cmd_synth(args):
    cfg = _config(args, synth=dict(duration=args.duration))
    manifest = build_synthetic_corpus(args.train, args.test, cfg.synth_config(), args.out)
    _echo_config(cfg, args.out)
    print(manifest)
    return 0


def cmd_extract(args):
    cfg = _config(args, chirp=dict(radius=args.radius, fft_size=args.fft_size),
                  noise=dict(snr_db=args.snr_db), frame=_frame_overrides(args))
    if not os.path.isfile(args.manifest):
        raise CommandError(f"cannot read manifest {args.manifest}")
    index = pipeline.extract_manifest(args.manifest, args.out, cfg.frame, cfg.chirp,
                                      cfg.noise.snr_db, cfg.seed)
    _echo_config(cfg, args.out)
    print(index)
    return 0


def cmd_corrupt(args):
    cfg = _config(args, noise=dict(snr_db=args.snr_db))
    if cfg.noise.snr_db is None:
        raise CommandError("an SNR is required (--snr-db or noise.snr_db in the config)")
    if os.path.isdir(args.input):
        root = args.input
        sources = sorted(glob.glob(os.path.join(root, "**", "*.wav"), recursive=True))
        if not sources:
            raise CommandError(f"no .wav files under {root}")
    elif os.path.isfile(args.input):
        root = os.path.dirname(args.input) or "."
        sources = [args.input]
    else:
        raise CommandError(f"no such file or directory: {args.input}")
    jobs = [(s, os.path.join(args.out, os.path.relpath(s, root)), cfg.noise.snr_db, cfg.seed)
            for s in sources]
    clipped = pipeline.run_parallel(_corrupt_one, jobs, "corrupt")
    _echo_config(cfg, args.out)
    total = sum(clipped)
    if total:
        print(f"warning: {total} samples clipped across {sum(c > 0 for c in clipped)} files",
              file=sys.stderr)
    print(f"wrote {len(jobs)} files to {args.out}")
    return 0


def _corrupt_one(job):
    source, target, snr_db, seed = job
    os.makedirs(os.path.dirname(target), exist_ok=True)
    return write_wav(target, pipeline.load_audio(source, snr_db, seed))


def cmd_train(args):
    cfg = _config(args, train=dict(learning_rate=args.lr, batch_size=args.batch_size,
                                   max_epochs=args.epochs, patience=args.patience,
                                   optimizer=args.optimizer),
                  model=dict(padding=args.padding))
    items = pipeline.load_index(args.features)
    result = pipeline.train_items(items, cfg.model, cfg.train_config())
    paths = pipeline.save_training(result, args.out)
    _echo_config(cfg, args.out)
    print(f"parameters: {param_count(result.config)}")
    for entry in result.log:
        print(f"epoch {entry['epoch']:3d}  train {entry['train_loss']:.6f}  "
              f"val {entry['val_loss']:.6f}")
    for p in paths:
        print(p)
    return 0


def _model_paths(specs):
    paths = []
    for spec in specs:
        if os.path.isdir(spec):
            found = [os.path.join(spec, n) for n in pipeline.CHECKPOINT_FILES
                     if os.path.isfile(os.path.join(spec, n))]
            if not found:
                raise CommandError(f"no model files in {spec}")
            paths.extend(found)
        elif os.path.isfile(spec):
            paths.append(spec)
        else:
            raise CommandError(f"model file not found: {spec}")
    return paths


def cmd_eval(args):
    models = [load_model(p) for p in _model_paths(args.model)]
    items = pipeline.load_index(args.features)
    reports = pipeline.evaluate_checkpoints(models, items, dataset=args.dataset)
    table = render_report(reports)
    print(table, end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.txt"), "w") as f:
            f.write(table)
        with open(os.path.join(args.out, "metrics.csv"), "w") as f:
            f.write(report_csv(reports))
    return 0


def cmd_inspect(args):
    cfg = _config(args, chirp=dict(radius=args.radius, fft_size=args.fft_size),
                  noise=dict(snr_db=args.snr_db), frame=_frame_overrides(args))
    buf = read_wav(args.wav)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        if args.spectrum_frame is not None:
            _dump_spectrum(w, buf, cfg, args.spectrum_frame, args.oracle)
        else:
            _dump_envelopes(w, buf, args.wav, cfg, args.frame)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _envelope(buf, cfg, radius, frame):
    feats = extract(buf, cfg.frame, ChirpConfig(radius, cfg.chirp.fft_size)).data
    if frame is None:
        return feats.mean(axis=0)
    if not 0 <= frame < len(feats):
        raise CommandError(f"frame {frame} out of range (0..{len(feats) - 1})")
    return feats[frame]


def _dump_envelopes(w, buf, path, cfg, frame):
    qcse_radius = cfg.chirp.radius
    cols = {"qse_db": _envelope(buf, cfg, 1.0, frame),
            "qcse_db": _envelope(buf, cfg, qcse_radius, frame)}
    if cfg.noise.snr_db is not None:
        spec = NoiseSpec(cfg.noise.snr_db, pipeline.noise_seed(cfg.seed, path))
        noisy = add_awgn(buf, spec)
        cols["qse_noisy_db"] = _envelope(noisy, cfg, 1.0, frame)
        cols["qcse_noisy_db"] = _envelope(noisy, cfg, qcse_radius, frame)
    w.writerow(["bin", *cols])
    for k in range(len(cols["qse_db"])):
        w.writerow([k, *(f"{c[k]:.6f}" for c in cols.values())])


def _dump_spectrum(w, buf, cfg, index, oracle):
    frames = frame_signal(buf, cfg.frame).rows
    if not 0 <= index < len(frames):
        raise CommandError(f"frame {index} out of range (0..{len(frames) - 1})")
    if oracle:
        spec = chirp_spectrum_oracle(frames[index], cfg.chirp.radius, cfg.chirp.fft_size)
    else:
        spec = chirp_spectrum(frames[index], cfg.chirp)
    db = 20.0 * np.log10(np.abs(spec) + LOG_FLOOR)
    w.writerow(["bin", "real", "imag", "magnitude_db"])
    for k, (z, m) in enumerate(zip(spec, db)):
        w.writerow([k, repr(float(z.real)), repr(float(z.imag)), f"{m:.6f}"])


def build_parser():
    p = argparse.ArgumentParser(prog="qcse", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="master seed for every random stage")

    def framing(sp):
        sp.add_argument("--frame-len", type=int)
        sp.add_argument("--hop", type=int)
        sp.add_argument("--window", choices=("rectangular", "hamming", "hann"))
        sp.add_argument("--fft-size", type=int)

    s = sub.add_parser("synth", help="generate a synthetic parallel corpus")
    common(s)
    s.add_argument("--train", type=int, required=True, help="train utterances per class")
    s.add_argument("--test", type=int, required=True, help="test utterances per class")
    s.add_argument("--duration", type=float, help="seconds per utterance")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract", help="manifest -> feature files")
    common(s)
    framing(s)
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--radius", type=float, help="1.0 gives QSE, anything else QCSE")
    s.add_argument("--snr-db", type=float, help="corrupt with white noise first")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("corrupt", help="add white Gaussian noise to WAV files")
    common(s)
    s.add_argument("--input", required=True, help="WAV file or directory")
    s.add_argument("--snr-db", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_corrupt)

    s = sub.add_parser("train", help="train the 1D-CNN on extracted features")
    common(s)
    s.add_argument("--features", required=True, help="feature directory from extract")
    s.add_argument("--out", required=True)
    s.add_argument("--epochs", type=int)
    s.add_argument("--patience", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--optimizer", choices=("adaptive_moment", "sgd_momentum"))
    s.add_argument("--padding", choices=("valid", "same"))
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score retained checkpoints on the test split")
    s.add_argument("--model", required=True, nargs="+", help="model files or a train output dir")
    s.add_argument("--features", required=True)
    s.add_argument("--out", help="directory for report.txt and metrics.csv")
    s.add_argument("--dataset", default="", help="dataset tag for the report")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("inspect", help="QSE/QCSE envelopes or one spectrum of a WAV as CSV")
    common(s)
    framing(s)
    s.add_argument("--wav", required=True)
    s.add_argument("--radius", type=float)
    s.add_argument("--snr-db", type=float, help="also emit envelopes of a noisy copy")
    s.add_argument("--frame", type=int, help="one frame instead of the mean over frames")
    s.add_argument("--spectrum-frame", type=int,
                   help="dump the full complex spectrum of this frame instead")
    s.add_argument("--oracle", action="store_true",
                   help="with --spectrum-frame, use direct summation")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CommandError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
