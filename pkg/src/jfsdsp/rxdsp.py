"""Receiver chain used to score the transmitter schemes.

Gray 16QAM mapping, CFO removal, a T/2-spaced 2x2 LMS equaliser (or plain
downsampling), blind phase search, and prefix-aided gain/quadrant
alignment.  Each stage has a genie counterpart that uses the simulator's
ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d
from sklearn.base import BaseEstimator

from ._validation import check_is_fitted, check_stream, restore_rank
from .filters import rrc_magnitude
from .params import omega_grid
from .waveform import DualPolWaveform, Waveform

# 2-bit Gray code per quadrature axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])  # indexed by first_bit*2 + second_bit
_NORM = np.sqrt(10.0)


@dataclass(frozen=True)
class QamConstellation:
    points: np.ndarray
    bits_per_symbol: int

    @classmethod
    def gray16(cls) -> "QamConstellation":
        idx = np.arange(16)
        i_bits = idx >> 2
        q_bits = idx & 3
        return cls(points=(_LEVELS[i_bits] + 1j * _LEVELS[q_bits]) / _NORM, bits_per_symbol=4)


QAM16 = QamConstellation.gray16()


def map_bits(bits) -> np.ndarray:
    """Gray-map bits (multiple of 4) to unit-power 16QAM; first two bits drive I."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size % 4:
        raise ValueError(f"bit count must be a multiple of 4, got {bits.size}")
    b = bits.reshape(-1, 4)
    return (_LEVELS[b[:, 0] * 2 + b[:, 1]] + 1j * _LEVELS[b[:, 2] * 2 + b[:, 3]]) / _NORM


def _axis_bits(v: np.ndarray) -> np.ndarray:
    """Hard-decide one axis (in units where levels are +-1, +-3) to two Gray bits."""
    b0 = (v > 0).astype(np.uint8)
    b1 = (np.abs(v) < 2).astype(np.uint8)
    # levels -3,-1,+1,+3 -> 00,01,11,10
    return np.stack([b0, b1], axis=-1)


def demap_symbols(symbols) -> np.ndarray:
    """Hard-decision inverse of :func:`map_bits`."""
    s = np.asarray(symbols, dtype=np.complex128).ravel() * _NORM
    bits = np.concatenate([_axis_bits(s.real), _axis_bits(s.imag)], axis=-1)
    return bits.reshape(-1)


def decide(symbols) -> np.ndarray:
    """Nearest 16QAM point, preserving shape."""
    s = np.asarray(symbols, dtype=np.complex128) * _NORM
    re = np.clip(2 * np.floor(s.real / 2) + 1, -3, 3)
    im = np.clip(2 * np.floor(s.imag / 2) + 1, -3, 3)
    return (re + 1j * im) / _NORM


# -- frequency offset ---------------------------------------------------------

def estimate_cfo(samples, fs: float, fft_size: int | None = None) -> float:
    """Fourth-power spectral-peak frequency offset estimate [Hz].

    ``samples`` may be 1-D or (n, n_pol); the fourth-power spectra of all
    polarisations are summed before peak picking.
    """
    arr, _ = check_stream(samples, "samples")
    n = arr.shape[0]
    if fft_size is None:
        fft_size = 1 << int(np.ceil(np.log2(n)))
    power = np.abs(np.fft.fft(arr**4, n=fft_size, axis=0)).sum(axis=1)
    k = int(np.argmax(power))
    freq = omega_grid(fft_size, fs)[k] / (2 * np.pi)
    return freq / 4


def cfo_compensate(w, mode: str, fs: float, delta_f: float | None = None, fft_size: int | None = None):
    """Remove a carrier frequency offset.

    ``genie`` uses the known ``delta_f``; ``estimate`` uses the
    fourth-power method.  Returns ``(waveform, delta_f_used)``.
    """
    if mode == "genie":
        if delta_f is None:
            raise ValueError("genie CFO compensation needs delta_f")
    elif mode == "estimate":
        arr = w.as_array() if isinstance(w, DualPolWaveform) else getattr(w, "samples", w)
        delta_f = estimate_cfo(arr, fs, fft_size)
    else:
        raise ValueError(f"mode must be 'genie' or 'estimate', got {mode!r}")
    rot = np.exp(-2j * np.pi * delta_f * np.arange(len(w)) / fs)
    if isinstance(w, DualPolWaveform):
        out = DualPolWaveform(Waveform(w.x_pol.samples * rot, fs), Waveform(w.y_pol.samples * rot, fs))
    elif isinstance(w, Waveform):
        out = Waveform(w.samples * rot, fs)
    else:
        arr, was_1d = check_stream(w)
        out = restore_rank(arr * rot[:, None], was_1d)
    return out, delta_f


# -- equalisation ---------------------------------------------------------------

def downsample_best_phase(samples) -> np.ndarray:
    """Keep every other sample, choosing the phase with the larger mean power."""
    arr, was_1d = check_stream(samples, "samples")
    n = arr.shape[0] // 2
    even, odd = arr[0 : 2 * n : 2], arr[1 : 2 * n : 2]
    pick = even if np.mean(np.abs(even) ** 2) >= np.mean(np.abs(odd) ** 2) else odd
    return restore_rank(pick, was_1d)


def _windows(arr: np.ndarray, n_taps: int) -> np.ndarray:
    """(n_symbols, n_pol, n_taps) tap-delay-line contents centred on sample 2k."""
    half = n_taps // 2
    padded = np.pad(arr, [(half, half + 1), (0, 0)])
    n_sym = arr.shape[0] // 2
    idx = 2 * np.arange(n_sym)[:, None] + np.arange(n_taps)[None, :]
    return np.moveaxis(padded[idx], 1, 2)


class Lms2x2Equalizer(BaseEstimator):
    """T/2-spaced 2x2 butterfly FIR trained by data-aided LMS, then frozen.

    Parameters
    ----------
    n_taps : int, default=15
    mu : float, default=1e-3
    n_epochs : int, default=30
        Passes over the training prefix.

    Attributes
    ----------
    taps_ : ndarray of shape (2, 2, n_taps)
        ``taps_[out, in]``; initialised to a centre spike identity.
    mse_ : ndarray
        Squared error per training step (summed over outputs).
    """

    def __init__(self, n_taps: int = 15, mu: float = 1e-3, n_epochs: int = 30):
        self.n_taps = n_taps
        self.mu = mu
        self.n_epochs = n_epochs

    def fit(self, X, y):
        """Train on 2-SPS samples ``X`` (n, 2) against known symbols ``y`` (m, 2)."""
        arr, _ = check_stream(X)
        ref, _ = check_stream(y, "y")
        if arr.shape[1] != 2 or ref.shape[1] != 2:
            raise ValueError("Lms2x2Equalizer needs two polarisations")
        if self.n_taps % 2 == 0:
            raise ValueError(f"n_taps must be odd, got {self.n_taps}")
        win = _windows(arr, self.n_taps)
        m = min(ref.shape[0], win.shape[0])
        taps = np.zeros((2, 2, self.n_taps), dtype=np.complex128)
        taps[0, 0, self.n_taps // 2] = taps[1, 1, self.n_taps // 2] = 1.0
        mse = []
        for _ in range(self.n_epochs):
            for k in range(m):
                u = win[k]
                out = np.einsum("oit,it->o", taps, u)
                err = ref[k] - out
                taps += self.mu * err[:, None, None] * np.conj(u)[None, :, :]
                mse.append(float(np.sum(np.abs(err) ** 2)))
        self.taps_ = taps
        self.mse_ = np.asarray(mse)
        return self

    def predict(self, X) -> np.ndarray:
        """Equalised symbols, one per two input samples, shape (n // 2, 2)."""
        check_is_fitted(self, "taps_")
        arr, _ = check_stream(X)
        return np.einsum("oit,kit->ko", self.taps_, _windows(arr, self.n_taps))


def equalize_2x2(w: DualPolWaveform, training=None, mode: str = "bypass", **lms) -> DualPolWaveform:
    """Reduce a 2-SPS dual-pol waveform to 1 SPS, optionally through LMS."""
    arr = w.as_array()
    if mode == "bypass":
        out = downsample_best_phase(arr)
    elif mode == "lms":
        if training is None:
            raise ValueError("lms mode needs training symbols")
        out = Lms2x2Equalizer(**lms).fit(arr, training).predict(arr)
    else:
        raise ValueError(f"mode must be 'bypass' or 'lms', got {mode!r}")
    return DualPolWaveform.from_array(out, w.fs / 2)


def rrc_matched_filter(w, ts: float, alpha: float):
    """Whole-waveform frequency-domain RRC matched filter (unit DC gain)."""
    arr, was_1d = check_stream(w, "w")
    fs = w.fs
    h = rrc_magnitude(omega_grid(arr.shape[0], fs), ts, alpha) / ts
    out = np.fft.ifft(np.fft.fft(arr, axis=0) * h[:, None], axis=0)
    if isinstance(w, DualPolWaveform):
        return DualPolWaveform.from_array(out, fs)
    return Waveform(out[:, 0], fs)


# -- carrier phase --------------------------------------------------------------

def blind_phase_search(symbols, n_test: int = 32, window: int = 64) -> np.ndarray:
    """Per-symbol phase estimate by blind phase search, unwrapped across pi/2 jumps."""
    s = np.asarray(symbols, dtype=np.complex128)
    test = np.arange(n_test) * (np.pi / 2) / n_test
    rotated = s[:, None] * np.exp(-1j * test)[None, :]
    dist = np.abs(rotated - decide(rotated)) ** 2
    smooth = uniform_filter1d(dist, size=window, axis=0, mode="nearest")
    theta = test[np.argmin(smooth, axis=1)]
    return np.unwrap(4 * theta) / 4


def carrier_phase_recover(symbols, method: str = "bps", phase=None, n_test: int = 32, window: int = 64):
    """Remove carrier phase from 1-SPS symbols of shape (n,) or (n, n_pol).

    ``bps`` runs blind phase search per polarisation; ``genie`` de-rotates
    by the known ``phase`` (one value per symbol, shared by polarisations).
    Quadrant ambiguity is left for :func:`align_to_reference`.
    """
    arr, was_1d = check_stream(symbols, "symbols")
    if method == "genie":
        if phase is None:
            raise ValueError("genie phase recovery needs the true phase")
        out = arr * np.exp(-1j * np.asarray(phase))[:, None]
    elif method == "bps":
        out = np.empty_like(arr)
        for p in range(arr.shape[1]):
            out[:, p] = arr[:, p] * np.exp(-1j * blind_phase_search(arr[:, p], n_test, window))
    else:
        raise ValueError(f"method must be 'bps' or 'genie', got {method!r}")
    return restore_rank(out, was_1d)


def align_to_reference(symbols, reference_prefix) -> np.ndarray:
    """Scale each polarisation by the LS complex gain fitted on a known prefix.

    Removes the amplitude mismatch and any pi/2 quadrant rotation left by
    blind phase search.
    """
    arr, was_1d = check_stream(symbols, "symbols")
    ref, _ = check_stream(reference_prefix, "reference_prefix")
    m = ref.shape[0]
    out = np.empty_like(arr)
    for p in range(arr.shape[1]):
        head = arr[:m, p]
        out[:, p] = arr[:, p] * (np.vdot(head, ref[:, p]) / np.vdot(head, head))
    return restore_rank(out, was_1d)
