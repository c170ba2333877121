"""Joint pulse shaping + CD pre-compensation block engine.

Each frame of N symbols goes through an N-point FFT. The spectrum is
replicated to 2N bins, which is the same as zero-stuffing to 2 samples
per symbol. It is multiplied by the joint filter table on passband bins
only, taken back with a 2N-point IFFT, and trimmed by 2V samples per side.
Frames advance by N - 2V symbols, so the kept samples tile the output.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_is_fitted, check_stream, restore_rank
from .filters import PRECOMPENSATE, JointFilter, build_joint_filter
from .params import DerivedConstants, SystemConfig, validate
from .waveform import Waveform


@dataclass(frozen=True)
class SymbolFrame:
    """The m-th block of N symbols, V of which on each side are borrowed."""

    symbols: np.ndarray
    block_index: int
    overlap: int

    def __post_init__(self):
        if self.symbols.ndim != 1:
            raise ValueError("frame symbols must be 1-D")
        if self.symbols.size < 4 * self.overlap:
            raise ValueError(
                f"frame of {self.symbols.size} symbols cannot carry overlap {self.overlap}"
            )

    @property
    def valid_range(self) -> tuple[int, int]:
        return self.overlap, self.symbols.size - self.overlap


@dataclass(frozen=True)
class OversampledBlock:
    samples: np.ndarray
    block_index: int


def replicate_spectrum(x_freq: np.ndarray) -> np.ndarray:
    """Periodically extend an N-bin spectrum to 2N bins along the last axis."""
    x_freq = np.asarray(x_freq)
    return np.concatenate([x_freq, x_freq], axis=-1)


def _process_frames(
    frames: np.ndarray, filt: JointFilter, overlap: int, skip_stopband: bool = True
) -> np.ndarray:
    """Vectorised block transform: (n_frames, N) symbols -> (n_frames, 2(N-2V)) samples."""
    n = filt.n_symbols
    if frames.shape[-1] != n:
        raise ValueError(f"frame length {frames.shape[-1]} does not match filter N={n}")
    spectrum = replicate_spectrum(np.fft.fft(frames, axis=-1))
    if skip_stopband:
        shaped = np.zeros_like(spectrum)
        pb = filt.passband_index
        shaped[..., pb] = spectrum[..., pb] * filt.engine_coeffs[pb]
    else:
        shaped = spectrum * filt.engine_coeffs
    wave = np.fft.ifft(shaped, axis=-1)
    cut = 2 * overlap
    return wave[..., cut : 2 * n - cut]


def process_block(
    frame: SymbolFrame, filt: JointFilter, skip_stopband: bool = True
) -> OversampledBlock:
    """Map one symbol frame to its 2(N - 2V) retained output samples."""
    if frame.symbols.size != filt.n_symbols:
        raise ValueError(
            f"frame has {frame.symbols.size} symbols but filter expects {filt.n_symbols}"
        )
    out = _process_frames(frame.symbols[None, :], filt, frame.overlap, skip_stopband)
    return OversampledBlock(samples=out[0], block_index=frame.block_index)


def frame_stream(symbols: np.ndarray, n: int, overlap: int) -> np.ndarray:
    """Cut a stream into overlapping frames, zero-padding both ends.

    Frame m holds padded symbols [m(N-2V), m(N-2V) + N), where the padding
    is V zeros in front and enough zeros behind to fill the last frame.
    Works along axis 0 and returns shape (n_frames, N, ...).
    """
    symbols = np.asarray(symbols)
    step = n - 2 * overlap
    if step <= 0:
        raise ValueError(f"overlap {overlap} leaves no payload in a frame of {n}")
    count = symbols.shape[0]
    n_frames = -(-count // step)
    tail = n_frames * step + 2 * overlap - count - overlap
    pad = [(overlap, tail)] + [(0, 0)] * (symbols.ndim - 1)
    padded = np.pad(symbols, pad)
    idx = np.arange(n_frames)[:, None] * step + np.arange(n)[None, :]
    return padded[idx]


def iter_frames(symbols: np.ndarray, n: int, overlap: int):
    """Yield :class:`SymbolFrame` objects for a 1-D symbol stream."""
    for m, row in enumerate(frame_stream(symbols, n, overlap)):
        yield SymbolFrame(symbols=row, block_index=m, overlap=overlap)


def run_stream(
    symbols,
    consts: DerivedConstants,
    filt: JointFilter | None = None,
    *,
    overlap: int | None = None,
    skip_stopband: bool = True,
) -> Waveform:
    """Shape and pre-compensate a whole 1-D symbol stream.

    Returns a waveform at 2 samples per symbol whose length is twice the
    number of input symbols.  Edge frames see zero padding, so the first
    and last few symbols carry the usual start-up transient.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.ndim != 1:
        raise ValueError(f"run_stream expects a 1-D stream, got shape {symbols.shape}")
    if filt is None:
        filt = build_joint_filter(consts)
    v = consts.overlap_symbols if overlap is None else overlap
    n = filt.n_symbols
    if symbols.size < n - 2 * v:
        raise ValueError(
            f"stream of {symbols.size} symbols is shorter than one frame payload ({n - 2 * v})"
        )
    frames = frame_stream(symbols, n, v)
    blocks = _process_frames(frames, filt, v, skip_stopband)
    return Waveform(blocks.reshape(-1)[: 2 * symbols.size], consts.fs)


class JointShapingPrecompensator(TransformerMixin, BaseEstimator):
    """Transmitter stage: raised-cosine shaping fused with CD pre-compensation.

    Parameters
    ----------
    config : SystemConfig, optional
        Link parameters; defaults to ``SystemConfig()``.
    skip_stopband : bool, default=True
        Multiply only passband bins.  Output is identical either way.

    Attributes
    ----------
    constants_ : DerivedConstants
    filter_ : JointFilter
    overlap_ : int
        Overlap V in symbols actually used.

    Examples
    --------
    >>> tx = JointShapingPrecompensator(SystemConfig(n_symbols=1024)).fit()
    >>> tx.transform(np.ones(1024)).shape
    (2048,)
    """

    def __init__(self, config: SystemConfig | None = None, skip_stopband: bool = True):
        self.config = config
        self.skip_stopband = skip_stopband

    def fit(self, X=None, y=None):
        config = self.config if self.config is not None else SystemConfig()
        self.constants_ = validate(config)
        self.filter_ = build_joint_filter(self.constants_, sign=PRECOMPENSATE)
        self.overlap_ = self.constants_.overlap_symbols
        return self

    def transform(self, X):
        """Map symbols of shape (n,) or (n, n_pol) to (2n,) or (2n, n_pol) samples."""
        check_is_fitted(self, "filter_")
        arr, was_1d = check_stream(X)
        n, v = self.filter_.n_symbols, self.overlap_
        if arr.shape[0] < n - 2 * v:
            raise ValueError(
                f"stream of {arr.shape[0]} symbols is shorter than one frame payload ({n - 2 * v})"
            )
        frames = frame_stream(arr, n, v)  # (n_frames, N, n_pol)
        blocks = _process_frames(np.moveaxis(frames, -1, 0), self.filter_, v, self.skip_stopband)
        out = blocks.reshape(arr.shape[1], -1)[:, : 2 * arr.shape[0]].T
        return restore_rank(np.ascontiguousarray(out), was_1d)
