import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcse.chirp import ChirpConfig, chirp_spectrum_oracle
from qcse.features import (
    QCSE,
    QSE,
    FeatureFormatError,
    FeatureMatrix,
    NormStats,
    Spectrogram,
    apply_norm,
    decode_features,
    encode_features,
    extract,
    fit_norm,
    invert_norm,
    quarter,
    read_features,
    spectrogram,
    write_features,
)
from qcse.signal_io import AudioBuffer, FrameConfig, frame_signal


def _speechy(rng, n=2048):
    t = np.arange(n) / 16000
    return AudioBuffer(0.3 * np.sin(2 * np.pi * 150 * t) + 0.05 * rng.standard_normal(n))


def test_spectrogram_shape(rng):
    s = spectrogram(_speechy(rng), FrameConfig(), ChirpConfig(1.01, 1024))
    assert s.data.shape == (5, 512)
    assert s.bin_count == 512


def test_silence_sits_on_floor():
    s = spectrogram(AudioBuffer(np.zeros(2048)), FrameConfig(), ChirpConfig())
    assert np.all(s.data == pytest.approx(-200.0))


def test_rows_match_oracle_at_both_radii(rng):
    buf = _speechy(rng, 1200)
    fcfg = FrameConfig(64, 64, "hamming", sample_rate=None)
    frames = frame_signal(buf, fcfg).rows
    rows = {}
    for radius in (1.0, 1.01):
        s = spectrogram(buf, fcfg, ChirpConfig(radius, 64))
        ref = 20 * np.log10(np.abs(chirp_spectrum_oracle(frames[3], radius, 64))[:32] + 1e-10)
        np.testing.assert_allclose(s.data[3], ref, atol=1e-9)
        rows[radius] = s.data
    assert not np.allclose(rows[1.0], rows[1.01])


def test_quarter_default_geometry(rng):
    s = Spectrogram(rng.standard_normal((10, 512)), 16000, 256)
    q = quarter(s)
    assert q.data.shape == (10, 128)
    assert np.array_equal(q.data, s.data[:, :128])


def test_quarter_small_example():
    q = quarter(Spectrogram(np.arange(8.0)[None, :], 16000, 256))
    assert q.data.tolist() == [[0.0, 1.0]]


def test_quarter_requires_divisible_bins():
    with pytest.raises(ValueError):
        quarter(Spectrogram(np.zeros((2, 10)), 16000, 256))


def test_quarter_is_idempotent_projection(rng):
    s = Spectrogram(rng.standard_normal((4, 64)), 16000, 256)
    q = quarter(s)
    padded = Spectrogram(np.concatenate([q.data, np.zeros((4, 48))], axis=1), 16000, 256)
    assert np.array_equal(quarter(padded).data, q.data)


def test_extract_kind_and_determinism(rng):
    buf = _speechy(rng)
    assert extract(buf, FrameConfig(), ChirpConfig(1.0)).feature_kind == QSE
    f1 = extract(buf, FrameConfig(), ChirpConfig(1.01))
    f2 = extract(buf, FrameConfig(), ChirpConfig(1.01))
    assert f1.feature_kind == QCSE and f1.radius == 1.01
    assert f1.data.tobytes() == f2.data.tobytes()


def test_unit_radius_matches_plain_fft_pipeline(rng):
    buf = _speechy(rng, 4000)
    fcfg = FrameConfig()
    frames = frame_signal(buf, fcfg).rows
    ref = 20 * np.log10(np.abs(np.fft.rfft(frames, 1024, axis=1))[:, :128] + 1e-10)
    np.testing.assert_allclose(extract(buf, fcfg, ChirpConfig(1.0)).data, ref, atol=1e-9)


@pytest.mark.parametrize("radius", [1.0, 1.01])
def test_gain_shifts_bins_uniformly(rng, radius):
    buf = _speechy(rng, 4000)
    a = extract(buf, FrameConfig(), ChirpConfig(radius)).data
    b = extract(AudioBuffer(buf.samples * 4.0), FrameConfig(), ChirpConfig(radius)).data
    np.testing.assert_allclose(b - a, 20 * np.log10(4.0), atol=1e-6)


def test_fit_norm_examples():
    single = fit_norm([np.array([[3.0, -1.0]])])
    assert np.array_equal(single.mean, [3.0, -1.0])
    assert np.all(single.std == 1e-6)
    two = fit_norm([np.array([[0.0]]), np.array([[2.0]])])
    assert two.mean[0] == 1.0 and two.std[0] == 1.0
    with pytest.raises(ValueError):
        fit_norm([])


def test_constant_dataset_normalizes_to_zero():
    f = FeatureMatrix(np.full((5, 3), 7.0), QSE, 1.0)
    assert np.all(apply_norm(f, fit_norm([f])).data == 0)


def test_apply_norm_identity_and_mismatch(rng):
    f = FeatureMatrix(rng.standard_normal((4, 6)), QCSE, 1.01)
    assert np.array_equal(apply_norm(f, NormStats.identity(6)).data, f.data)
    with pytest.raises(ValueError):
        apply_norm(f, NormStats.identity(5))


def test_self_normalization_standardizes(rng):
    mats = [FeatureMatrix(rng.normal(3, 5, (20, 8)), QCSE, 1.01) for _ in range(3)]
    stats = fit_norm(mats)
    z = np.concatenate([apply_norm(m, stats).data for m in mats])
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(z.std(axis=0), 1, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frames=st.integers(1, 10), bins=st.integers(1, 16))
def test_normalization_invertible(seed, frames, bins):
    r = np.random.default_rng(seed)
    f = FeatureMatrix(r.normal(-40, 20, (frames, bins)), QCSE, 1.01)
    stats = fit_norm([FeatureMatrix(r.normal(-40, 20, (30, bins)), QCSE, 1.01)])
    back = invert_norm(apply_norm(f, stats), stats)
    np.testing.assert_allclose(back.data, f.data, atol=1e-9, rtol=0)


def _random_features(r):
    data = r.standard_normal((int(r.integers(0, 20)), int(r.integers(1, 200)))) * 50
    radius = float(r.choice([1.0, r.uniform(0.5, 2.0)]))
    return FeatureMatrix(data.astype(np.float32), QSE if radius == 1.0 else QCSE, radius)


def test_feature_file_roundtrip(tmp_path, rng):
    for i in range(100):
        f = _random_features(rng)
        p = tmp_path / f"{i}.qcf"
        write_features(p, f)
        g = read_features(p)
        assert (g.feature_kind, g.radius, g.data.shape) == (f.feature_kind, f.radius, f.data.shape)
        assert g.data.tobytes() == f.data.tobytes()
        assert encode_features(g) == p.read_bytes()


def test_feature_file_layout():
    f = FeatureMatrix(np.array([[1.0, 2.0]], np.float32), QCSE, 1.01)
    blob = encode_features(f)
    assert blob[:4] == b"QCSE" and blob[4] == 1 and blob[5] == 1
    assert np.frombuffer(blob[6:14], "<f8")[0] == 1.01
    assert np.frombuffer(blob[14:22], "<u4").tolist() == [1, 2]
    assert np.frombuffer(blob[22:], "<f4").tolist() == [1.0, 2.0]


def test_feature_file_rejections():
    good = encode_features(FeatureMatrix(np.zeros((7, 128), np.float32), QCSE, 1.01))
    with pytest.raises(FeatureFormatError, match="magic"):
        decode_features(b"XXXX" + good[4:])
    with pytest.raises(FeatureFormatError, match="version"):
        decode_features(good[:4] + b"\x02" + good[5:])
    with pytest.raises(FeatureFormatError, match=r"expected 3606 bytes, got 3605"):
        decode_features(good[:-1])
    with pytest.raises(FeatureFormatError, match="header"):
        decode_features(good[:10])
