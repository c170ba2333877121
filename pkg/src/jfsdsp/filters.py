"""Frequency-domain transfer-function tables.

Builds the raised-cosine shaping magnitude, the chromatic-dispersion
all-pass phasor, and their product sampled on the 2N-point DFT grid used
by the block engine.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .params import DerivedConstants, omega_grid

PRECOMPENSATE = +1
PROPAGATE = -1


def rc_magnitude(omega, ts: float, alpha: float) -> np.ndarray:
    """Raised-cosine spectrum amplitude.

    Flat at ``ts`` up to pi(1-alpha)/ts, zero beyond pi(1+alpha)/ts, with a
    half-cosine taper in between.  ``alpha=0`` gives a brick wall.

    Parameters
    ----------
    omega : array_like
        Angular frequency [rad/s].
    ts : float
        Symbol period [s].
    alpha : float
        Roll-off factor in [0, 1].

    Returns
    -------
    np.ndarray
        Real, even-in-omega amplitude with the same shape as ``omega``.
    """
    if ts <= 0:
        raise ValueError(f"ts must be > 0, got {ts}")
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    w = np.abs(np.asarray(omega, dtype=float))
    lo = np.pi * (1 - alpha) / ts
    hi = np.pi * (1 + alpha) / ts
    out = np.zeros_like(w)
    out[w <= lo] = ts
    if alpha > 0:
        taper = (w > lo) & (w <= hi)
        out[taper] = ts / 2 * (1 + np.cos(ts / (2 * alpha) * (w[taper] - lo)))
    return out


def rrc_magnitude(omega, ts: float, alpha: float) -> np.ndarray:
    """Root-raised-cosine amplitude, scaled so the flat part equals ``ts``."""
    return np.sqrt(ts * rc_magnitude(omega, ts, alpha))


def cd_phasor(omega, beta2: float, length: float, sign: int) -> np.ndarray:
    """All-pass dispersion phasor exp(sign * j * beta2/2 * omega^2 * L).

    ``sign=+1`` pre-compensates, ``sign=-1`` propagates through the fiber.
    """
    if sign not in (PRECOMPENSATE, PROPAGATE):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    omega = np.asarray(omega, dtype=float)
    return np.exp(sign * 1j * (beta2 / 2) * omega**2 * length)


@dataclass(frozen=True)
class JointFilter:
    """2N-bin table of the joint shaping + dispersion response.

    ``coeffs`` holds the transfer function exactly as written (flat-top
    magnitude ``ts``).  ``engine_coeffs`` is the same table multiplied by
    the sample rate, which is the gain that maps a unit symbol to a unit
    pulse peak after the 2N-point inverse DFT; the block engine uses it
    so that no extra scaling appears per block.
    """

    coeffs: np.ndarray = field(repr=False)
    stopband_mask: np.ndarray = field(repr=False)
    passband_count: int
    n_symbols: int
    cd_sign: int
    omega: np.ndarray = field(repr=False)
    engine_coeffs: np.ndarray = field(repr=False)
    passband_index: np.ndarray = field(repr=False)


def _shaping(profile: str):
    if profile == "rc":
        return rc_magnitude
    if profile == "rrc":
        return rrc_magnitude
    raise ValueError(f"unknown shaping profile {profile!r}")


def build_joint_filter(
    consts: DerivedConstants,
    n_symbols: int | None = None,
    sign: int = PRECOMPENSATE,
    *,
    length: float | None = None,
    profile: str | None = None,
) -> JointFilter:
    """Tabulate the joint transfer function on the 2N-point grid.

    ``length`` and ``profile`` default to the fiber length and shaping
    profile of the configuration ``consts`` was derived from.
    """
    cfg = consts.config
    n = consts.block_symbols if n_symbols is None else n_symbols
    length = cfg.fiber_length if length is None else length
    profile = cfg.shaping if profile is None else profile
    omega = consts.omega_grid_2n
    if omega.size != 2 * n:
        omega = omega_grid(2 * n, consts.fs)
    alpha = cfg.rolloff
    stopband = np.abs(omega) > np.pi * (1 + alpha) / consts.ts
    mag = _shaping(profile)(omega, consts.ts, alpha)
    coeffs = mag * cd_phasor(omega, consts.beta2, length, sign)
    coeffs[stopband] = 0.0
    passband_index = np.flatnonzero(~stopband)
    for arr in (coeffs, stopband, omega):
        arr.setflags(write=False)
    engine = coeffs * consts.fs
    engine.setflags(write=False)
    return JointFilter(
        coeffs=coeffs,
        stopband_mask=stopband,
        passband_count=int(passband_index.size),
        n_symbols=n,
        cd_sign=sign,
        omega=omega,
        engine_coeffs=engine,
        passband_index=passband_index,
    )


def filter_table_csv(filt: JointFilter) -> str:
    """CSV dump of a filter table: bin, frequency_hz, real, imag, stopband."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin", "frequency_hz", "real", "imag", "stopband"])
    freq = filt.omega / (2 * np.pi)
    for k, (f, c, m) in enumerate(zip(freq, filt.coeffs, filt.stopband_mask)):
        writer.writerow([k, repr(float(f)), repr(float(c.real)), repr(float(c.imag)), int(m)])
    return buf.getvalue()
