import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcse.chirp import (
    ChirpConfig,
    chirp_spectrum,
    chirp_spectrum_oracle,
    chirp_weights,
    log_magnitude,
)


def test_weights_unit_radius():
    assert np.array_equal(chirp_weights(1.0, 5), np.ones(5))


def test_weights_radius_two():
    assert np.array_equal(chirp_weights(2.0, 3), [1.0, 0.5, 0.25])


def test_weights_last_element_default_radius():
    last = chirp_weights(1.01, 1024)[-1]
    # independent evaluation through exp/log
    assert last == pytest.approx(math.exp(-1023 * math.log(1.01)), rel=1e-12)
    assert round(last, 7) == pytest.approx(3.80e-5, abs=5e-8)


def test_weights_reject_nonpositive_radius():
    with pytest.raises(ValueError):
        chirp_weights(0.0, 4)
    with pytest.raises(ValueError):
        ChirpConfig(radius=-1.0)


@pytest.mark.parametrize("radius", [0.5, 1.0, 1.01, 3.0])
def test_impulse_at_origin_is_flat(radius):
    spec = chirp_spectrum([1, 0, 0, 0], ChirpConfig(radius, 4))
    assert np.array_equal(spec, np.ones(4, complex))


def test_delayed_impulse_analytic():
    spec = chirp_spectrum([0, 1, 0, 0], ChirpConfig(2.0, 4))
    k = np.arange(4)
    np.testing.assert_allclose(np.abs(spec), 0.5, atol=1e-15)
    np.testing.assert_allclose(spec, 0.5 * np.exp(-1j * np.pi * k / 2), atol=1e-15)


def test_unit_radius_is_dft(rng):
    x = rng.standard_normal(1000)
    np.testing.assert_allclose(chirp_spectrum(x, ChirpConfig(1.0, 1024)),
                               np.fft.fft(x, 1024), rtol=0, atol=1e-12)


def test_oracle_basics(rng):
    x = rng.standard_normal(16)
    np.testing.assert_allclose(chirp_spectrum_oracle(x, 1.0, 32), np.fft.fft(x, 32), atol=1e-12)
    np.testing.assert_allclose(chirp_spectrum_oracle([1.0, 0, 0], 1.3, 8), np.ones(8), atol=0)


def test_frame_longer_than_fft_rejected():
    with pytest.raises(ValueError):
        chirp_spectrum(np.zeros(9), ChirpConfig(1.0, 8))
    with pytest.raises(ValueError):
        chirp_spectrum_oracle(np.zeros(9), 1.0, 8)


def test_fft_size_must_be_power_of_two():
    with pytest.raises(ValueError):
        ChirpConfig(1.01, 1000)


def test_oracle_equivalence_random(rng):
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 65))
        radius = float(rng.uniform(0.9, 1.1))
        x = rng.uniform(-1, 1, n)
        fast = chirp_spectrum(x, ChirpConfig(radius, 64))
        worst = max(worst, np.max(np.abs(fast - chirp_spectrum_oracle(x, radius, 64))))
    assert worst < 1e-9


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 64), radius=st.floats(0.2, 5.0), seed=st.integers(0, 2**32 - 1))
def test_conjugate_symmetry(n, radius, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    spec = chirp_spectrum(x, ChirpConfig(radius, 64))
    k = np.arange(1, 64)
    np.testing.assert_allclose(spec[64 - k], np.conj(spec[k]), rtol=1e-12, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), radius=st.floats(0.9, 1.1),
       seed=st.integers(0, 2**32 - 1))
def test_linearity(a, b, radius, seed):
    r = np.random.default_rng(seed)
    x, y = r.standard_normal(48), r.standard_normal(48)
    cfg = ChirpConfig(radius, 64)
    lhs = chirp_spectrum(a * x + b * y, cfg)
    rhs = a * chirp_spectrum(x, cfg) + b * chirp_spectrum(y, cfg)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(radius=st.floats(0.5, 2.0).filter(lambda r: abs(r - 1) > 1e-6), n=st.integers(2, 512))
def test_weight_monotonicity(radius, n):
    d = np.diff(chirp_weights(radius, n))
    assert np.all(d < 0) if radius > 1 else np.all(d > 0)


def test_log_magnitude_floor_and_length():
    assert np.all(log_magnitude(np.zeros(8)) == pytest.approx(-200.0))
    np.testing.assert_allclose(log_magnitude(np.ones(8)), 20 * np.log10(1 + 1e-10))
    assert log_magnitude(np.zeros(1024, complex)).shape == (512,)
