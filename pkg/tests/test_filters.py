import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jfsdsp.filters import (
    PRECOMPENSATE,
    PROPAGATE,
    build_joint_filter,
    cd_phasor,
    filter_table_csv,
    rc_magnitude,
    rrc_magnitude,
)
from jfsdsp.params import SystemConfig, validate

TS = 1 / 36e9
# (beta2/2) w^2 L for w = 2 pi 18 GHz, beta2 = -20.43 ps^2/km, L = 100 km (mpmath, 40 digits)
CD_PHASE_18GHZ = -13.066013960843763
CD_PHASE_18GHZ_WRAPPED = -0.49964334648458970


def test_rc_dc_is_ts():
    assert rc_magnitude(0.0, TS, 0.2) == TS


def test_rc_nyquist_is_half():
    assert rc_magnitude(np.pi / TS, TS, 0.2) == pytest.approx(TS / 2, rel=1e-12)


def test_rc_zero_beyond_band_edge():
    assert rc_magnitude(1.3 * np.pi / TS, TS, 0.2) == 0.0


def test_rc_brick_wall_for_zero_rolloff():
    w = np.array([0.99, 1.0, 1.01]) * np.pi / TS
    np.testing.assert_array_equal(rc_magnitude(w, TS, 0.0), [TS, TS, 0.0])


def test_rc_rejects_bad_ts():
    with pytest.raises(ValueError):
        rc_magnitude(0.0, -TS, 0.2)


@pytest.mark.parametrize("alpha", [0.01, 0.2, 0.7, 1.0])
def test_rc_continuous_at_breakpoints(alpha):
    for edge in (np.pi * (1 - alpha) / TS, np.pi * (1 + alpha) / TS):
        a, b = rc_magnitude([edge - 1e-6, edge + 1e-6], TS, alpha)
        assert abs(a - b) < 1e-9 * TS


@given(w=st.floats(-3e11, 3e11), alpha=st.floats(0.01, 1.0))
def test_rc_even_and_bounded(w, alpha):
    a, b = rc_magnitude([w, -w], TS, alpha)
    assert a == b
    assert 0.0 <= a <= TS


def test_rrc_squares_to_rc():
    w = np.linspace(-np.pi * 1.3 / TS, np.pi * 1.3 / TS, 101)
    np.testing.assert_allclose(rrc_magnitude(w, TS, 0.2) ** 2, TS * rc_magnitude(w, TS, 0.2), rtol=1e-12)


def test_cd_phasor_dc_and_unit_modulus():
    w = np.linspace(-2e11, 2e11, 501)
    p = cd_phasor(w, -2.04e-26, 100e3, PRECOMPENSATE)
    assert cd_phasor(0.0, -2.04e-26, 100e3, PRECOMPENSATE) == 1 + 0j
    np.testing.assert_allclose(np.abs(p), 1.0, atol=1e-15)


def test_cd_phasor_high_precision_phase():
    w = 2 * np.pi * 18e9
    beta2 = -20.43e-27
    phase = beta2 / 2 * w**2 * 100e3
    assert phase == pytest.approx(CD_PHASE_18GHZ, abs=1e-9)
    got = np.angle(cd_phasor(w, beta2, 100e3, PRECOMPENSATE))
    assert got == pytest.approx(CD_PHASE_18GHZ_WRAPPED, abs=1e-9)


def test_cd_phasor_rejects_bad_sign():
    with pytest.raises(ValueError):
        cd_phasor(1.0, -2e-26, 1.0, 0)


def test_joint_filter_l0_is_rc_table(consts):
    f = build_joint_filter(consts, length=0.0)
    np.testing.assert_array_equal(f.coeffs.imag, 0.0)
    np.testing.assert_array_equal(f.coeffs.real, rc_magnitude(f.omega, consts.ts, 0.2))


def test_joint_filter_passband_count(consts):
    # exact rational enumeration of |f| <= 21.6 GHz on the 256-bin grid at 72 GHz
    f = build_joint_filter(consts)
    assert f.passband_count == 153
    assert f.passband_count == np.count_nonzero(np.abs(f.omega) <= np.pi * 1.2 / consts.ts)


def test_joint_filter_invariants(consts):
    f = build_joint_filter(consts)
    assert np.all(f.coeffs[f.stopband_mask] == 0)
    flat = np.abs(f.omega) <= np.pi * 0.8 / consts.ts
    np.testing.assert_allclose(np.abs(f.coeffs[flat]), consts.ts, rtol=1e-15)
    n2 = f.coeffs.size
    k = np.arange(1, n2 // 2)
    np.testing.assert_allclose(np.abs(f.coeffs[k]), np.abs(f.coeffs[n2 - k]), rtol=1e-15)
    np.testing.assert_allclose(f.engine_coeffs, f.coeffs * consts.fs)


def test_joint_filter_is_read_only(consts):
    f = build_joint_filter(consts)
    with pytest.raises(ValueError):
        f.coeffs[0] = 0


def test_band_edge_bins_are_passband():
    # alpha = 1/8 at N = 64 puts grid bins exactly on the band edge
    cfg = SystemConfig(rolloff=0.125, fiber_length=0.0, block_symbols=64)
    f = build_joint_filter(validate(cfg))
    edge = np.isclose(np.abs(f.omega), np.pi * 1.125 / validate(cfg).ts, rtol=1e-12)
    assert edge.any()
    assert not f.stopband_mask[edge].any()


def test_pre_times_post_cancels_cd(consts):
    pre = build_joint_filter(consts, sign=PRECOMPENSATE)
    post = build_joint_filter(consts, sign=PROPAGATE)
    pb = ~pre.stopband_mask
    rc = rc_magnitude(pre.omega, consts.ts, 0.2)
    np.testing.assert_allclose((pre.coeffs * post.coeffs)[pb], rc[pb] ** 2, rtol=1e-12)


def test_energy_and_passband_versus_rolloff():
    # wider roll-off admits more bins, but the RC energy integral is
    # N Ts^2 (1 - alpha/4) on the 2N grid, so the table energy falls with alpha
    alphas = (0.01, 0.05, 0.1, 0.2, 0.5, 1.0)
    energies, counts = [], []
    for a in alphas:
        c = validate(SystemConfig(rolloff=a, overlap_symbols=0))
        f = build_joint_filter(c)
        energies.append(np.sum(np.abs(f.coeffs) ** 2) / c.ts**2)
        counts.append(f.passband_count)
    assert np.all(np.diff(counts) > 0)
    assert np.all(np.diff(energies) < 0)
    np.testing.assert_allclose(energies, [128 * (1 - a / 4) for a in alphas], rtol=2e-3)


def test_filter_table_csv(consts):
    f = build_joint_filter(consts)
    rows = list(csv.reader(io.StringIO(filter_table_csv(f))))
    assert rows[0] == ["bin", "frequency_hz", "real", "imag", "stopband"]
    assert len(rows) == 1 + 2 * consts.block_symbols
    k = 5
    assert complex(float(rows[1 + k][2]), float(rows[1 + k][3])) == f.coeffs[k]
    assert sum(int(r[4]) for r in rows[1:]) == 256 - 153
