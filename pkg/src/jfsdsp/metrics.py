"""Scoring: PAPR/CCDF, BER/Q/EVM, and real-multiplication counts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import erfcinv

from .waveform import DualPolWaveform, Waveform


@dataclass(frozen=True)
class CcdfCurve:
    thresholds: np.ndarray
    probabilities: np.ndarray
    window_samples: int | None
    n_windows: int


@dataclass(frozen=True)
class ComplexityReport:
    jfscd_mults_per_symbol: float
    cascade_mults_per_symbol: float
    reduction_fraction: float
    n: int
    alpha: float
    fir_taps: int


@dataclass
class MetricReport:
    """Named metric values together with the configuration that produced them."""

    values: dict[str, Any]
    config: dict[str, Any] = field(default_factory=dict)


def _samples(w) -> np.ndarray:
    if isinstance(w, Waveform):
        return w.samples
    if isinstance(w, DualPolWaveform):
        raise TypeError("papr_windowed takes one polarisation at a time")
    return np.asarray(w)


def papr_windowed(w, window: int = 1024) -> np.ndarray:
    """Peak-to-average power of consecutive windows, in dB.

    Peaks are taken per window but the average is the mean power of the
    whole stream, so clipping lowers the reported peaks instead of being
    renormalised away.  A trailing partial window is dropped.
    """
    x = _samples(w)
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    p = np.abs(x) ** 2
    mean = p.mean()
    if mean == 0:
        raise ValueError("cannot compute PAPR of an all-zero waveform")
    n_win = p.size // window
    if n_win == 0:
        raise ValueError(f"waveform of {p.size} samples is shorter than one window ({window})")
    peaks = p[: n_win * window].reshape(n_win, window).max(axis=1)
    return 10 * np.log10(peaks / mean)


def ccdf(paprs, thresholds, window_samples: int | None = None) -> CcdfCurve:
    """Empirical Pr(PAPR > threshold)."""
    paprs = np.sort(np.asarray(paprs, dtype=float).ravel())
    thresholds = np.asarray(thresholds, dtype=float).ravel()
    above = paprs.size - np.searchsorted(paprs, thresholds, side="right")
    return CcdfCurve(thresholds, above / paprs.size, window_samples, paprs.size)


def papr_at_probability(paprs, probability: float) -> float:
    """PAPR level exceeded with the given probability (upper quantile)."""
    return float(np.quantile(np.asarray(paprs, dtype=float), 1 - probability))


def ber(bits_rx, bits_tx) -> float:
    bits_rx = np.asarray(bits_rx)
    bits_tx = np.asarray(bits_tx)
    if bits_rx.shape != bits_tx.shape:
        raise ValueError(f"bit arrays differ in shape: {bits_rx.shape} vs {bits_tx.shape}")
    return float(np.count_nonzero(bits_rx != bits_tx)) / bits_rx.size


def q_from_ber(ber_value: float) -> float:
    """Q-factor in dB, 20 log10(sqrt(2) erfcinv(2 BER)).

    Returns -inf for BER >= 0.5 and +inf for BER = 0.
    """
    if ber_value >= 0.5:
        return -math.inf
    if ber_value <= 0:
        return math.inf
    return 20 * math.log10(math.sqrt(2) * erfcinv(2 * ber_value))


def evm(symbols_rx, symbols_ref, normalize: bool = True) -> float:
    """RMS error vector magnitude in percent.

    With ``normalize`` the received symbols are first scaled by the
    least-squares complex gain onto the reference.
    """
    rx = np.asarray(symbols_rx, dtype=np.complex128).ravel()
    ref = np.asarray(symbols_ref, dtype=np.complex128).ravel()
    if normalize:
        rx = rx * (np.vdot(rx, ref) / np.vdot(rx, rx))
    return 100 * math.sqrt(np.mean(np.abs(rx - ref) ** 2) / np.mean(np.abs(ref) ** 2))


def q_from_evm(evm_percent: float) -> float:
    """SNR-proxy Q in dB: -20 log10(EVM_rms); +inf for zero EVM."""
    if evm_percent <= 0:
        return math.inf
    return -20 * math.log10(evm_percent / 100)


def mults_jfscd(n: int, alpha: float) -> float:
    """Real multiplications per symbol of the joint engine: (8/N)[N/2 log2 N + (1+a)N + N log2 2N]."""
    return 8 / n * (n / 2 * math.log2(n) + (1 + alpha) * n + n * math.log2(2 * n))


def mults_cascade(n: int, fir_taps: int = 21) -> float:
    """FIR shaping plus frequency-domain CD: 2 taps + 16 log2(2N) + 16 per symbol."""
    return 2 * fir_taps + 16 * math.log2(2 * n) + 16


def complexity_report(n: int, alpha: float, fir_taps: int = 21) -> ComplexityReport:
    j = mults_jfscd(n, alpha)
    c = mults_cascade(n, fir_taps)
    return ComplexityReport(j, c, 1 - j / c, n, alpha, fir_taps)
