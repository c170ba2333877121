"""Linear fiber channel and transceiver impairments.

Order applied by :func:`apply_channel`: TX laser phase noise, chromatic
dispersion, first-order DGD, ASE noise loading, carrier frequency offset,
LO laser phase noise.  Every random stream is drawn from its own labelled
sub-seed, so switching one impairment on or off never changes another's
realisation.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .cascade import fd_cd_filter
from .filters import PROPAGATE
from .params import DerivedConstants, omega_grid
from .waveform import DualPolWaveform, Waveform


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for ``label`` derived from the master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(label.encode()),)))


def _map(w, fn):
    if isinstance(w, DualPolWaveform):
        return DualPolWaveform(Waveform(fn(w.x_pol.samples), w.fs), Waveform(fn(w.y_pol.samples), w.fs))
    return Waveform(fn(w.samples), w.fs)


def propagate_cd(w, beta2: float, length: float, **ols):
    """Forward dispersion through ``length`` metres of fiber (energy preserving)."""
    return fd_cd_filter(w, beta2, length, PROPAGATE, **ols)


def apply_dgd(w: DualPolWaveform, tau: float) -> DualPolWaveform:
    """First-order PMD: +-tau/2 delay on principal states at 45 degrees.

    The delay is applied as a linear phase over one whole-waveform DFT, so
    it is cyclic and exactly unitary.
    """
    if tau == 0:
        return w
    fs = w.fs
    x, y = w.x_pol.samples, w.y_pol.samples
    c = s = np.sqrt(0.5)
    a, b = c * x - s * y, s * x + c * y
    omega = omega_grid(x.size, fs)
    a = np.fft.ifft(np.fft.fft(a) * np.exp(-1j * omega * tau / 2))
    b = np.fft.ifft(np.fft.fft(b) * np.exp(1j * omega * tau / 2))
    return DualPolWaveform(Waveform(c * a + s * b, fs), Waveform(-s * a + c * b, fs))


def ase_variance(signal_power: float, osnr_db: float, ref_bandwidth: float, fs: float) -> float:
    """Per-polarisation complex noise variance for a target OSNR.

    ``signal_power`` is the mean total power over both polarisations.
    """
    osnr = 10 ** (osnr_db / 10)
    return signal_power / (2 * osnr) * (fs / ref_bandwidth)


def load_ase(w: DualPolWaveform, osnr_db: float, ref_bandwidth: float, fs: float, rng) -> DualPolWaveform:
    """Add circular white Gaussian noise to both polarisations for ``osnr_db``.

    ``osnr_db=inf`` returns the input unchanged.
    """
    if np.isposinf(osnr_db):
        return w
    sigma2 = ase_variance(w.power(), osnr_db, ref_bandwidth, fs)
    n = len(w)
    noise = rng.standard_normal((4, n)) * np.sqrt(sigma2 / 2)
    return DualPolWaveform(
        Waveform(w.x_pol.samples + noise[0] + 1j * noise[1], fs),
        Waveform(w.y_pol.samples + noise[2] + 1j * noise[3], fs),
    )


def wiener_phase(n: int, linewidth: float, fs: float, rng) -> np.ndarray:
    """Laser phase random walk with increment variance 2 pi linewidth / fs."""
    if linewidth == 0:
        return np.zeros(n)
    return np.cumsum(rng.standard_normal(n) * np.sqrt(2 * np.pi * linewidth / fs))


def apply_phase_noise(w, linewidth: float, fs: float, rng, return_phase: bool = False):
    """Rotate every sample by a common Wiener phase (both polarisations share the laser)."""
    phase = wiener_phase(len(w), linewidth, fs, rng)
    out = w if linewidth == 0 else _map(w, lambda s: s * np.exp(1j * phase))
    return (out, phase) if return_phase else out


def apply_cfo(w, delta_f: float, fs: float):
    if delta_f == 0:
        return w
    rot = np.exp(2j * np.pi * delta_f * np.arange(len(w)) / fs)
    return _map(w, lambda s: s * rot)


@dataclass(frozen=True)
class ChannelTruth:
    """Ground truth kept for genie compensation at the receiver."""

    tx_phase: np.ndarray
    lo_phase: np.ndarray
    freq_offset: float

    @property
    def total_phase(self) -> np.ndarray:
        return self.tx_phase + self.lo_phase


def apply_channel(
    w: DualPolWaveform,
    consts: DerivedConstants,
    *,
    seed: int | None = None,
    length: float | None = None,
    osnr_db: float | None = None,
    linewidth: float | None = None,
    freq_offset: float | None = None,
    dgd: float | None = None,
) -> tuple[DualPolWaveform, ChannelTruth]:
    """Run the full impairment chain; keyword overrides replace config values."""
    cfg = consts.config
    seed = cfg.seed if seed is None else seed
    length = cfg.fiber_length if length is None else length
    osnr_db = cfg.osnr_db if osnr_db is None else osnr_db
    linewidth = cfg.linewidth if linewidth is None else linewidth
    freq_offset = cfg.freq_offset if freq_offset is None else freq_offset
    dgd = cfg.dgd if dgd is None else dgd
    fs = consts.fs

    w, tx_phase = apply_phase_noise(w, linewidth, fs, substream(seed, "tx_phase"), return_phase=True)
    if length:
        w = propagate_cd(w, consts.beta2, length)
    w = apply_dgd(w, dgd)
    w = load_ase(w, osnr_db, cfg.ref_bandwidth, fs, substream(seed, "ase"))
    w = apply_cfo(w, freq_offset, fs)
    w, lo_phase = apply_phase_noise(w, linewidth, fs, substream(seed, "lo_phase"), return_phase=True)
    return w, ChannelTruth(tx_phase=tx_phase, lo_phase=lo_phase, freq_offset=freq_offset)
