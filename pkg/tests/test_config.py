import json

import pytest

from qcse.config import RunConfig, load_config


def test_defaults():
    cfg = RunConfig()
    assert (cfg.frame.frame_len, cfg.frame.hop, cfg.frame.window) == (1024, 256, "hamming")
    assert cfg.chirp.radius == 1.01 and cfg.chirp.fft_size == 1024
    assert cfg.noise.snr_db is None
    assert (cfg.train.learning_rate, cfg.train.batch_size, cfg.train.patience,
            cfg.train.max_epochs) == (1e-3, 64, 3, 50)


def test_dict_roundtrip_and_dump(tmp_path):
    cfg = RunConfig.from_dict({"seed": 7, "chirp": {"radius": 1.0}, "synth": {"formants":
                                [[600, 70, 0], [1100, 90, -3]]}})
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    cfg.dump(tmp_path / "c.json")
    assert load_config(tmp_path / "c.json") == cfg
    assert "seed" not in json.loads((tmp_path / "c.json").read_text())["train"]


def test_master_seed_reaches_stages():
    cfg = RunConfig(seed=9)
    assert cfg.synth_config().seed == 9 and cfg.train_config().seed == 9


def test_override_precedence():
    cfg = RunConfig.from_dict({"chirp": {"radius": 1.02}, "train": {"patience": 5}})
    out = cfg.override(seed=None, chirp={"radius": None}, train={"patience": 2})
    assert out.chirp.radius == 1.02 and out.train.patience == 2 and out.seed == 0
    assert cfg.override(seed=3).seed == 3


@pytest.mark.parametrize("doc", [
    {"colour": 1}, {"chirp": {"radius": 1.01, "bogus": 2}}, {"train": {"seed": 4}},
    {"seed": -1}, {"chirp": {"radius": 0}},
])
def test_invalid_documents(doc):
    with pytest.raises(ValueError):
        RunConfig.from_dict(doc)
