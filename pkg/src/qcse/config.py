"""One declarative document holding every pipeline parameter.

Precedence is defaults < config file < command-line flags. A single master
``seed`` feeds every random stage; each stage derives its own streams from it
with :func:`qcse.rng.derive_seed`, so the sections carry no seeds of their own.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .chirp import ChirpConfig
from .corpus import SynthConfig
from .model import ModelConfig, TrainConfig
from .signal_io import FrameConfig


@dataclass(frozen=True)
class NoiseConfig:
    snr_db: float | None = None


_SECTIONS = {
    "frame": FrameConfig,
    "chirp": ChirpConfig,
    "noise": NoiseConfig,
    "model": ModelConfig,
    "train": TrainConfig,
    "synth": SynthConfig,
}


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    frame: FrameConfig = field(default_factory=FrameConfig)
    chirp: ChirpConfig = field(default_factory=ChirpConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    @classmethod
    def from_dict(cls, doc):
        unknown = set(doc) - {"seed", *_SECTIONS}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {"seed": doc.get("seed", 0)}
        for name, typ in _SECTIONS.items():
            section = dict(doc.get(name, {}))
            allowed = {f.name for f in dataclasses.fields(typ)} - {"seed"}
            bad = set(section) - allowed
            if bad:
                raise ValueError(f"unknown keys in [{name}]: {sorted(bad)}")
            kwargs[name] = typ(**{k: _tuplify(v) for k, v in section.items()})
        return cls(**kwargs)

    def to_dict(self):
        doc = {"seed": self.seed}
        for name in _SECTIONS:
            d = dataclasses.asdict(getattr(self, name))
            d.pop("seed", None)
            doc[name] = d
        return doc

    def override(self, **sections):
        """Return a copy with ``section={field: value}`` updates; ``None`` values are skipped."""
        doc = self.to_dict()
        for name, updates in sections.items():
            if name == "seed":
                if updates is not None:
                    doc["seed"] = updates
                continue
            doc[name].update({k: v for k, v in updates.items() if v is not None})
        return RunConfig.from_dict(doc)

    # sections with the master seed filled in
    def synth_config(self):
        return dataclasses.replace(self.synth, seed=self.seed)

    def train_config(self):
        return dataclasses.replace(self.train, seed=self.seed)

    def dump(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path) as f:
        return RunConfig.from_dict(json.load(f))
