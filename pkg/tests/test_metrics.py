import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jfsdsp.metrics import (
    ber,
    ccdf,
    complexity_report,
    evm,
    mults_cascade,
    mults_jfscd,
    papr_at_probability,
    papr_windowed,
    q_from_ber,
    q_from_evm,
)
from jfsdsp.waveform import DualPolWaveform, Waveform

# 20 log10(q) with 0.5 erfc(q / sqrt 2) = BER, solved by mpmath.findroot
Q_BER_1E3 = 9.799822569043980
Q_BER_2_3E2 = 6.000570237047966
SPIKE_PAPR = 19.590023075765094  # 10 log10(100 / 1.099)


def test_constant_amplitude_is_zero_db():
    x = np.exp(1j * np.linspace(0, 50, 4096))
    np.testing.assert_allclose(papr_windowed(x, 1024), 0.0, atol=1e-12)


def test_spike_papr():
    x = np.ones(1000, complex)
    x[500] = 10
    assert papr_windowed(Waveform(x, 1.0), 1000)[0] == pytest.approx(SPIKE_PAPR, abs=1e-12)


@given(c=st.floats(1e-3, 1e3))
def test_papr_scale_invariant(c):
    x = np.random.default_rng(0).standard_normal(4096) + 0j
    np.testing.assert_allclose(papr_windowed(c * x, 512), papr_windowed(x, 512), atol=1e-9)


def test_papr_drops_partial_window_and_validates():
    assert papr_windowed(np.ones(2500), 1000).size == 2
    with pytest.raises(ValueError):
        papr_windowed(np.ones(10), 100)
    with pytest.raises(ValueError):
        papr_windowed(np.zeros(100), 10)
    with pytest.raises(ValueError):
        papr_windowed(np.ones(10), 0)
    with pytest.raises(TypeError):
        papr_windowed(DualPolWaveform.from_array(np.ones((8, 2)), 1.0), 4)


def test_papr_uses_global_mean():
    x = np.concatenate([np.ones(100), 2 * np.ones(100)])
    mean = 2.5
    np.testing.assert_allclose(papr_windowed(x, 100), 10 * np.log10([1 / mean, 4 / mean]))


def test_ccdf_edges_and_monotone(rng):
    paprs = rng.uniform(3, 12, 5000)
    t = np.linspace(0, 15, 301)
    curve = ccdf(paprs, t, 1024)
    assert curve.probabilities[0] == 1.0 and curve.probabilities[-1] == 0.0
    assert np.all(np.diff(curve.probabilities) <= 0)
    assert curve.n_windows == 5000 and curve.window_samples == 1024


def test_ccdf_strict_exceedance():
    curve = ccdf([1.0, 2.0, 3.0, 4.0], [2.0])
    assert curve.probabilities[0] == 0.5


def test_papr_at_probability():
    paprs = np.arange(1000.0)
    assert papr_at_probability(paprs, 1e-2) == pytest.approx(np.quantile(paprs, 0.99))


def test_ber_counts():
    assert ber([0, 1, 1, 0], [0, 1, 0, 0]) == 0.25
    with pytest.raises(ValueError):
        ber([0, 1], [0, 1, 1])


def test_q_from_ber_oracle_values():
    assert q_from_ber(1e-3) == pytest.approx(Q_BER_1E3, abs=1e-9)
    assert q_from_ber(2.3e-2) == pytest.approx(Q_BER_2_3E2, abs=1e-9)


def test_q_from_ber_sentinels():
    assert q_from_ber(0.5) == -math.inf
    assert q_from_ber(0.7) == -math.inf
    assert q_from_ber(0.0) == math.inf


@given(a=st.floats(1e-12, 0.4999), b=st.floats(1e-12, 0.4999))
def test_q_from_ber_decreasing(a, b):
    if a < b:
        assert q_from_ber(a) > q_from_ber(b)


def test_evm_zero_and_sentinel(rng):
    s = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    assert evm(s, s) == 0.0
    assert q_from_evm(0.0) == math.inf


def test_evm_scaled_without_normalisation(rng):
    s = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
    assert evm(1.1 * s, s, normalize=False) == pytest.approx(10.0, rel=1e-12)
    assert evm(1.1 * s, s) == pytest.approx(0.0, abs=1e-12)


def test_evm_matches_injected_noise(rng):
    levels = np.array([-3, -1, 1, 3]) / np.sqrt(10)
    ref = rng.choice(levels, 2**16) + 1j * rng.choice(levels, 2**16)
    sigma2 = 0.01
    noise = np.sqrt(sigma2 / 2) * (rng.standard_normal(2**16) + 1j * rng.standard_normal(2**16))
    e = evm(ref + noise, ref, normalize=False) / 100
    assert e**2 == pytest.approx(sigma2 / np.mean(np.abs(ref) ** 2), rel=0.02)
    assert q_from_evm(100 * e) == pytest.approx(-20 * np.log10(e))


def test_mults_jfscd_values():
    assert mults_jfscd(128, 0.01) == pytest.approx(100.08, abs=1e-12)
    assert mults_jfscd(64, 0.01) == pytest.approx(88.08, abs=1e-12)


@given(a1=st.floats(0, 1), a2=st.floats(0, 1), n=st.sampled_from([32, 64, 128, 256, 512, 1024]))
def test_mults_jfscd_linear_in_alpha(a1, a2, n):
    assert mults_jfscd(n, a2) - mults_jfscd(n, a1) == pytest.approx(8 * (a2 - a1), abs=1e-9)


def test_mults_cascade_values():
    assert mults_cascade(128) == 186
    assert mults_cascade(64) == 170
    assert mults_cascade(128, fir_taps=11) == 166


def test_reduction_at_128():
    rep = complexity_report(128, 0.01)
    assert rep.reduction_fraction == pytest.approx(1 - rep.jfscd_mults_per_symbol / rep.cascade_mults_per_symbol)
    assert 100 * rep.reduction_fraction == pytest.approx(46.19, abs=0.01)
    assert 100 * complexity_report(64, 0.01).reduction_fraction == pytest.approx(48.19, abs=0.01)


@pytest.mark.parametrize("n", [32, 64, 128, 256, 512, 1024])
@pytest.mark.parametrize("alpha", [0.01, 0.1, 0.2])
def test_joint_engine_always_cheaper(n, alpha):
    assert mults_jfscd(n, alpha) / mults_cascade(n) < 1
