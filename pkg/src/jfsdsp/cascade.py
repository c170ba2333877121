"""Conventional cascaded transmitter: pulse shaping, then a separate CD filter.

Two shaping variants exist.  ``ideal`` shapes in the frequency domain on
the same 2N grid and frame partition as the joint engine, applying the
shaping and dispersion tables as two separate stages; it must agree with
:mod:`jfsdsp.jfscd` to rounding error.  ``fir`` is the practical
baseline: a 21-tap raised-cosine FIR followed by an overlap-save CD
equaliser.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_waveform_like, check_is_fitted, check_stream, restore_rank
from .filters import PRECOMPENSATE, PROPAGATE, cd_phasor, _shaping
from .jfscd import frame_stream
from .params import DerivedConstants, SystemConfig, omega_grid, validate
from .waveform import Waveform


@dataclass(frozen=True)
class FirFilter:
    taps: np.ndarray
    span_symbols: int
    sps: int

    def __post_init__(self):
        if self.taps.size % 2 == 0:
            raise ValueError(f"FIR must have an odd tap count, got {self.taps.size}")

    @property
    def center(self) -> int:
        return self.taps.size // 2


def rc_impulse(t, alpha: float) -> np.ndarray:
    """Raised-cosine impulse response at ``t`` in symbol periods (h(0) = 1)."""
    t = np.asarray(t, dtype=float)
    denom = 1 - (2 * alpha * t) ** 2
    singular = np.isclose(denom, 0.0, rtol=0, atol=1e-12)
    safe = np.where(singular, 1.0, denom)
    h = np.sinc(t) * np.cos(np.pi * alpha * t) / safe
    if alpha > 0:
        h = np.where(singular, np.pi / 4 * np.sinc(1 / (2 * alpha)), h)
    return h


def rc_fir_taps(alpha: float, span_symbols: int = 10, sps: int = 2) -> FirFilter:
    """Sampled raised-cosine FIR with ``span_symbols * sps + 1`` taps."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    n_taps = span_symbols * sps + 1
    if n_taps % 2 == 0:
        raise ValueError(f"span_symbols*sps + 1 must be odd, got {n_taps}")
    t = (np.arange(n_taps) - n_taps // 2) / sps
    return FirFilter(taps=rc_impulse(t, alpha), span_symbols=span_symbols, sps=sps)


def upsample(symbols: np.ndarray, sps: int = 2) -> np.ndarray:
    """Zero-stuff along axis 0."""
    symbols = np.asarray(symbols)
    out = np.zeros((symbols.shape[0] * sps,) + symbols.shape[1:], dtype=np.complex128)
    out[::sps] = symbols
    return out


def fir_shape(symbols, fir: FirFilter, fs: float) -> Waveform:
    """Zero-stuff to ``fir.sps`` and convolve, centre-aligned ("same")."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    up = upsample(symbols, fir.sps)
    full = np.convolve(up, fir.taps)
    return Waveform(full[fir.center : fir.center + up.size], fs)


def cd_memory_samples(beta2: float, length: float, fs: float) -> int:
    """Group-delay spread of the CD filter across the full sampled band, in samples."""
    return int(math.ceil(abs(beta2) * length * 2 * np.pi * fs * fs))


def default_ols_sizes(beta2: float, length: float, fs: float) -> tuple[int, int]:
    """(fft_size, overlap) for overlap-save CD filtering.

    The overlap is four times the dispersion memory plus 32 samples: the
    sampled chirp kernel has slowly decaying tails, so discarding just the
    memory leaves ~1e-3 relative error.
    """
    memory = cd_memory_samples(beta2, length, fs)
    overlap = 4 * memory + 32
    fft_size = max(256, 1 << int(math.ceil(math.log2(4 * overlap))))
    return fft_size, overlap


def overlap_save(x: np.ndarray, response: np.ndarray, overlap: int) -> np.ndarray:
    """Filter ``x`` along axis 0 by a zero-phase-centred frequency response.

    ``overlap`` samples are discarded per block, split between the two
    ends because the dispersion kernel is non-causal.
    """
    fft_size = response.size
    if overlap >= fft_size // 2:
        raise ValueError(f"overlap {overlap} must be < fft_size/2 = {fft_size // 2}")
    left = overlap // 2
    right = overlap - left
    step = fft_size - overlap
    count = x.shape[0]
    n_blocks = -(-count // step)
    tail = n_blocks * step + right - count
    padded = np.pad(x, [(left, tail)] + [(0, 0)] * (x.ndim - 1))
    idx = np.arange(n_blocks)[:, None] * step + np.arange(fft_size)[None, :]
    blocks = padded[idx]  # (n_blocks, fft_size, ...)
    resp = response.reshape((1, fft_size) + (1,) * (x.ndim - 1))
    y = np.fft.ifft(np.fft.fft(blocks, axis=1) * resp, axis=1)
    kept = y[:, left : fft_size - right]
    return kept.reshape((-1,) + x.shape[1:])[:count]


def fd_cd_filter(w, beta2: float, length: float, sign: int, fft_size=None, overlap=None, *, fs=None):
    """Overlap-save frequency-domain dispersion filter.

    Accepts a :class:`Waveform`, :class:`DualPolWaveform`, or an array with
    ``fs`` given, and returns the same kind.  ``sign=-1`` propagates,
    ``sign=+1`` compensates.
    """
    if fs is None:
        fs = w.fs
    arr, was_1d = check_stream(w, "w")
    d_fft, d_overlap = default_ols_sizes(beta2, length, fs)
    fft_size = d_fft if fft_size is None else fft_size
    overlap = d_overlap if overlap is None else overlap
    if fft_size <= 0 or fft_size & (fft_size - 1):
        raise ValueError(f"fft_size must be a power of two, got {fft_size}")
    if length == 0 or beta2 == 0:
        out = arr.copy()
    else:
        response = cd_phasor(omega_grid(fft_size, fs), beta2, length, sign)
        out = overlap_save(arr, response, overlap)
    return as_waveform_like(w, restore_rank(out, was_1d), fs)


def _ideal_frames(frames: np.ndarray, consts: DerivedConstants, length: float, profile: str):
    """Shape and CD-filter frames as two separate frequency-domain stages."""
    n = frames.shape[-1]
    v = consts.overlap_symbols
    omega = omega_grid(2 * n, consts.fs)
    shaping = _shaping(profile)(omega, consts.ts, consts.config.rolloff) * consts.fs
    cd = cd_phasor(omega, consts.beta2, length, PRECOMPENSATE)
    up = np.zeros(frames.shape[:-1] + (2 * n,), dtype=np.complex128)
    up[..., ::2] = frames
    spectrum = np.fft.fft(up, axis=-1)
    shaped = spectrum * shaping
    precomp = shaped * cd
    wave = np.fft.ifft(precomp, axis=-1)
    return wave[..., 2 * v : 2 * n - 2 * v]


def cascade_precompensate(
    symbols, config: SystemConfig, variant: str = "ideal", *, length: float | None = None
) -> Waveform:
    """Shape then pre-compensate a 1-D symbol stream with the cascaded architecture."""
    consts = validate(config)
    symbols = np.asarray(symbols, dtype=np.complex128)
    length = config.fiber_length if length is None else length
    if variant == "ideal":
        n, v = consts.block_symbols, consts.overlap_symbols
        blocks = _ideal_frames(frame_stream(symbols, n, v), consts, length, config.shaping)
        return Waveform(blocks.reshape(-1)[: 2 * symbols.size], consts.fs)
    if variant == "fir":
        shaped = fir_shape(symbols, rc_fir_taps(config.rolloff), consts.fs)
        return fd_cd_filter(shaped, consts.beta2, length, PRECOMPENSATE)
    raise ValueError(f"variant must be 'ideal' or 'fir', got {variant!r}")


class CascadePrecompensator(TransformerMixin, BaseEstimator):
    """Shaping followed by a separate CD stage; baseline and equivalence oracle.

    Parameters
    ----------
    config : SystemConfig, optional
    variant : {"ideal", "fir"}
        ``ideal`` mirrors the joint engine's grid and framing; ``fir`` uses
        a ``2*fir_span+1``-tap FIR then overlap-save CD filtering.
    fir_span : int, default=10
    precompensate : bool, default=True
        ``False`` shapes only, as in a post-compensation link.
    """

    def __init__(self, config=None, variant="ideal", fir_span=10, precompensate=True):
        self.config = config
        self.variant = variant
        self.fir_span = fir_span
        self.precompensate = precompensate

    def fit(self, X=None, y=None):
        if self.variant not in ("ideal", "fir"):
            raise ValueError(f"variant must be 'ideal' or 'fir', got {self.variant!r}")
        config = self.config if self.config is not None else SystemConfig()
        self.constants_ = validate(config)
        self.length_ = config.fiber_length if self.precompensate else 0.0
        if self.variant == "fir":
            self.fir_ = rc_fir_taps(config.rolloff, self.fir_span, config.sps)
        return self

    def transform(self, X):
        check_is_fitted(self, "constants_")
        arr, was_1d = check_stream(X)
        c = self.constants_
        if self.variant == "ideal":
            frames = frame_stream(arr, c.block_symbols, c.overlap_symbols)
            blocks = _ideal_frames(np.moveaxis(frames, -1, 0), c, self.length_, c.config.shaping)
            out = blocks.reshape(arr.shape[1], -1)[:, : 2 * arr.shape[0]].T
        else:
            up = upsample(arr)
            out = np.stack(
                [np.convolve(up[:, p], self.fir_.taps)[self.fir_.center : self.fir_.center + up.shape[0]]
                 for p in range(arr.shape[1])],
                axis=1,
            )
            if self.length_:
                out = fd_cd_filter(out, c.beta2, self.length_, PRECOMPENSATE, fs=c.fs)
        return restore_rank(np.ascontiguousarray(out), was_1d)


def post_compensate(w, consts: DerivedConstants, length: float | None = None, **ols):
    """Receiver-side CD compensation for the post-compensation baseline."""
    length = consts.config.fiber_length if length is None else length
    return fd_cd_filter(w, consts.beta2, length, PRECOMPENSATE, **ols)


__all__ = [
    "FirFilter",
    "rc_impulse",
    "rc_fir_taps",
    "fir_shape",
    "fd_cd_filter",
    "cascade_precompensate",
    "CascadePrecompensator",
    "post_compensate",
    "PROPAGATE",
    "PRECOMPENSATE",
]
