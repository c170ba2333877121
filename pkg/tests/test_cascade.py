import math

import numpy as np
import pytest

from conftest import qam16, rel_l2
from jfsdsp.cascade import (
    CascadePrecompensator,
    FirFilter,
    cascade_precompensate,
    default_ols_sizes,
    fd_cd_filter,
    fir_shape,
    overlap_save,
    post_compensate,
    rc_fir_taps,
    rc_impulse,
)
from jfsdsp.filters import PRECOMPENSATE, PROPAGATE, cd_phasor
from jfsdsp.jfscd import run_stream
from jfsdsp.link import simulate_link
from jfsdsp.params import SystemConfig, default_overlap, derive_beta2, omega_grid, validate
from jfsdsp.waveform import DualPolWaveform, Waveform

FS = 72e9


def test_fir_centre_tap_and_length():
    fir = rc_fir_taps(0.2)
    assert fir.taps.size == 21
    assert fir.taps[fir.center] == 1.0
    assert np.argmax(np.abs(fir.taps)) == fir.center


@pytest.mark.parametrize("alpha", [0.01, 0.2, 0.5, 1.0])
def test_fir_nyquist_zeros_and_symmetry(alpha):
    fir = rc_fir_taps(alpha)
    c = fir.center
    np.testing.assert_allclose(fir.taps[c + 2 :: 2], 0, atol=1e-16)
    np.testing.assert_allclose(fir.taps, fir.taps[::-1], atol=1e-12)


def test_fir_singularity_filled_by_limit():
    # t = 2.5 Ts is the removable singularity for alpha = 0.2; tap index c + 5
    fir = rc_fir_taps(0.2)
    limit = math.pi / 4 * np.sinc(2.5)
    assert limit == pytest.approx(0.1, rel=1e-15)
    assert fir.taps[fir.center + 5] == pytest.approx(limit, rel=1e-15)
    # perturbing alpha moves off the singular point; the neighbours bracket the limit
    near = [rc_impulse(2.5, 0.2 + d) for d in (-1e-6, 1e-6)]
    assert np.mean(near) == pytest.approx(limit, abs=1e-6)


def test_fir_rejects_bad_inputs():
    with pytest.raises(ValueError):
        rc_fir_taps(0.0)
    with pytest.raises(ValueError):
        FirFilter(np.ones(4), 2, 2)


def test_fir_shape_impulse_returns_taps():
    fir = rc_fir_taps(0.2)
    s = np.zeros(41, complex)
    s[20] = 1
    out = fir_shape(s, fir, FS).samples
    assert out.size == 82
    np.testing.assert_allclose(out[40 - 10 : 40 + 11], fir.taps)
    assert not np.delete(out, np.arange(30, 51)).any()


def test_fir_shape_zero_input():
    assert not fir_shape(np.zeros(100, complex), rc_fir_taps(0.2), FS).samples.any()


def test_fir_truncation_gap(rng):
    q = (rng.choice([-1, 1], 4000) + 1j * rng.choice([-1, 1], 4000)) / np.sqrt(2)
    short = fir_shape(q, rc_fir_taps(0.2), FS).samples
    reference = fir_shape(q, rc_fir_taps(0.2, 500), FS).samples  # 1001 taps
    np.testing.assert_allclose(short[::2], q, atol=1e-12)
    assert rel_l2(short[200:-200], reference[200:-200]) <= 0.02


def _white(rng, n=2**15):
    return Waveform(rng.standard_normal(n) + 1j * rng.standard_normal(n), FS)


def test_fd_cd_identity_at_zero_length(rng):
    w = _white(rng)
    out = fd_cd_filter(w, -2.04e-26, 0.0, PROPAGATE)
    assert rel_l2(out.samples, w.samples) <= 1e-12


def test_fd_cd_rejects_bad_geometry(rng):
    w = _white(rng, 4096)
    with pytest.raises(ValueError):
        fd_cd_filter(w, -2.04e-26, 1e5, PROPAGATE, fft_size=1024, overlap=512)
    with pytest.raises(ValueError):
        fd_cd_filter(w, -2.04e-26, 1e5, PROPAGATE, fft_size=1000, overlap=100)


def test_fd_cd_preserves_container_and_length(rng):
    arr = rng.standard_normal((3001, 2)) + 0j
    dp = DualPolWaveform.from_array(arr, FS)
    assert isinstance(fd_cd_filter(dp, -2e-26, 1e5, PROPAGATE), DualPolWaveform)
    assert fd_cd_filter(arr, -2e-26, 1e5, PROPAGATE, fs=FS).shape == arr.shape
    assert len(fd_cd_filter(Waveform(arr[:, 0], FS), -2e-26, 1e5, PROPAGATE)) == 3001


def test_overlap_save_matches_circular_when_one_block(rng):
    x = rng.standard_normal(100) + 0j
    h = np.ones(256)
    np.testing.assert_allclose(overlap_save(x, h, 64), x, atol=1e-14)


def _round_trip(rng, **ols):
    w = _white(rng)
    beta2 = derive_beta2(16, 1550e-9)
    back = fd_cd_filter(fd_cd_filter(w, beta2, 1e5, PRECOMPENSATE, **ols), beta2, 1e5, PROPAGATE, **ols)
    return rel_l2(back.samples[4096:-4096], w.samples[4096:-4096])


@pytest.mark.xfail(strict=True, reason="sampled chirp kernel has slowly decaying tails; overlap-save floor ~1e-3")
def test_fd_cd_round_trip_at_1e10(rng):
    assert _round_trip(rng) < 1e-10


def test_fd_cd_round_trip_improves_with_overlap(rng):
    default = _round_trip(rng)
    wide = _round_trip(rng, fft_size=2**14, overlap=2**12)
    assert default < 5e-3
    assert wide < default / 3


@pytest.mark.xfail(strict=True, reason="overlap-save is not exactly unitary; energy drift ~1e-4")
def test_fd_cd_energy_at_1e9(rng):
    w = _white(rng)
    out = fd_cd_filter(w, derive_beta2(16, 1550e-9), 1e5, PROPAGATE)
    assert abs(out.energy() / w.energy() - 1) < 1e-9


def test_fd_cd_energy_close(rng):
    w = _white(rng)
    out = fd_cd_filter(w, derive_beta2(16, 1550e-9), 1e5, PROPAGATE)
    assert abs(out.energy() / w.energy() - 1) < 1e-3


def _width_at(x, level=0.01):
    mag = np.abs(x)
    idx = np.flatnonzero(mag >= level * mag.max())
    return idx[-1] - idx[0]


def test_rc_pulse_spreads_under_dispersion():
    m = 1024
    pulse = rc_impulse((np.arange(m) - m // 2) / 2, 0.2).astype(complex)
    beta2, length = -2.04e-26, 1e5  # beta2 L = 2040 ps^2
    # dense-matrix DFT oracle
    k = np.arange(m)
    dft = np.exp(-2j * np.pi * np.outer(k, k) / m)
    oracle = dft.conj().T @ (cd_phasor(omega_grid(m, FS), beta2, length, PROPAGATE) * (dft @ pulse)) / m
    out = fd_cd_filter(Waveform(pulse, FS), beta2, length, PROPAGATE).samples
    assert rel_l2(out, oracle) < 1e-2
    assert _width_at(oracle) >= 8 * 2
    assert _width_at(out) >= 8 * 2
    assert _width_at(oracle) > _width_at(pulse)


def test_default_ols_sizes():
    fft, ov = default_ols_sizes(derive_beta2(16, 1550e-9), 1e5, FS)
    assert ov == 4 * 67 + 32 and fft == 2048


GRID = [(n, a, length) for n in (64, 128) for a in (0.01, 0.1, 0.2) for length in (0.0, 40e3, 100e3)]


@pytest.mark.parametrize("n, alpha, length", GRID)
def test_ideal_cascade_equals_joint_engine(n, alpha, length, rng):
    beta2 = derive_beta2(16, SystemConfig().wavelength)
    v = min(default_overlap(beta2, length, 1 / 36e9, alpha), n // 4)
    cfg = SystemConfig(block_symbols=n, rolloff=alpha, fiber_length=length, overlap_symbols=v)
    s = qam16(rng, 5000)
    joint = run_stream(s, validate(cfg)).samples
    assert rel_l2(joint, cascade_precompensate(s, cfg, "ideal").samples) < 1e-10


def test_ideal_cascade_l0_is_pure_shaping(rng):
    cfg = SystemConfig(fiber_length=0.0)
    s = qam16(rng, 2000)
    out = cascade_precompensate(s, cfg, "ideal").samples
    np.testing.assert_allclose(out[200:-200:2], s[100:-100], atol=1e-3)


def test_fir_variant_is_fir_then_cd(rng):
    cfg = SystemConfig()
    consts = validate(cfg)
    s = qam16(rng, 3000)
    shaped = fir_shape(s, rc_fir_taps(0.2), consts.fs)
    expected = fd_cd_filter(shaped, consts.beta2, 1e5, PRECOMPENSATE).samples
    np.testing.assert_allclose(cascade_precompensate(s, cfg, "fir").samples, expected, atol=1e-13)


def test_unknown_variant():
    with pytest.raises(ValueError):
        cascade_precompensate(np.ones(1000), SystemConfig(), "iir")
    with pytest.raises(ValueError):
        CascadePrecompensator(variant="iir").fit()


@pytest.mark.parametrize("variant", ["ideal", "fir"])
def test_estimator_matches_function(variant, rng):
    cfg = SystemConfig()
    s = qam16(rng, 3000, 2)
    out = CascadePrecompensator(cfg, variant).fit().transform(s)
    for p in range(2):
        np.testing.assert_allclose(out[:, p], cascade_precompensate(s[:, p], cfg, variant).samples, atol=1e-13)


def test_post_compensation_undoes_shaping_only_link(rng):
    cfg = SystemConfig()
    consts = validate(cfg)
    s = qam16(rng, 4000)
    shaped = CascadePrecompensator(cfg, precompensate=False).fit().transform(s)
    rx = fd_cd_filter(Waveform(shaped, consts.fs), consts.beta2, 1e5, PROPAGATE)
    back = post_compensate(rx, consts).samples
    assert rel_l2(back[1000:-1000], shaped[1000:-1000]) < 1e-2


@pytest.mark.slow
def test_fir_baseline_close_to_ideal_in_link():
    cfg = SystemConfig()
    q_fir = simulate_link(cfg, "cascade_fir").q_db
    q_ideal = simulate_link(cfg, "cascade_ideal").q_db
    assert abs(q_fir - q_ideal) <= 0.2
