"""Square-boundary clipping (SBC) for peak-to-average power reduction.

A sample is scaled toward the origin only when its larger quadrature
component exceeds the threshold, so the decision path needs two absolute
values and a comparison per sample and no magnitude computation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_waveform_like, check_is_fitted, check_stream, restore_rank
from .waveform import DualPolWaveform, Waveform


@dataclass
class ClipStats:
    seen_count: int = 0
    clipped_count: int = 0

    def __add__(self, other: "ClipStats") -> "ClipStats":
        return ClipStats(self.seen_count + other.seen_count, self.clipped_count + other.clipped_count)

    @property
    def clipped_fraction(self) -> float:
        return self.clipped_count / self.seen_count if self.seen_count else 0.0


@dataclass
class ClipConfig:
    """Clipping ratio, the amplitude threshold it resolves to, and counters.

    ``threshold=None`` means "derive from the mean power of the waveform
    being clipped".
    """

    cr_db: float
    threshold: float | None = None
    stats: ClipStats = field(default_factory=ClipStats)

    def __post_init__(self):
        if self.threshold is not None and not self.threshold > 0:
            raise ValueError(f"threshold must be > 0, got {self.threshold}")


def threshold_from_cr(mean_power: float, cr_db: float) -> float:
    """Amplitude threshold A_th = sqrt(E|x|^2) * 10^(CR/20)."""
    if not mean_power > 0:
        raise ValueError(f"mean_power must be > 0, got {mean_power}")
    return math.sqrt(mean_power) * 10 ** (cr_db / 20)


def clip_sample(x: complex, a_th: float) -> complex:
    """Clip one complex sample to the square |Re|, |Im| <= a_th."""
    if not a_th > 0:
        raise ValueError(f"threshold must be > 0, got {a_th}")
    re, im = x.real, x.imag
    are, aim = abs(re), abs(im)
    if are >= aim:
        if are <= a_th:
            return complex(x)
        return complex(math.copysign(a_th, re), math.copysign(min(aim * (a_th / are), a_th), im))
    if aim <= a_th:
        return complex(x)
    return complex(math.copysign(min(are * (a_th / aim), a_th), re), math.copysign(a_th, im))


def clip_array(x: np.ndarray, a_th: float) -> tuple[np.ndarray, int]:
    """Vectorised :func:`clip_sample`; returns the clipped copy and the clip count.

    The dominant component of a clipped sample is written as exactly
    +-a_th so that a second pass finds nothing to clip.
    """
    if not a_th > 0:
        raise ValueError(f"threshold must be > 0, got {a_th}")
    x = np.asarray(x, dtype=np.complex128)
    re, im = x.real, x.imag
    are, aim = np.abs(re), np.abs(im)
    peak = np.maximum(are, aim)
    hit = peak > a_th
    out = x.copy()
    if not hit.any():
        return out, 0
    r, i, ar, ai, m = re[hit], im[hit], are[hit], aim[hit], peak[hit]
    scale = a_th / m
    re_dom = ar >= ai
    new_re = np.where(re_dom, np.copysign(a_th, r), np.copysign(np.minimum(ar * scale, a_th), r))
    new_im = np.where(re_dom, np.copysign(np.minimum(ai * scale, a_th), i), np.copysign(a_th, i))
    out[hit] = new_re + 1j * new_im
    return out, int(hit.sum())


def clip_waveform(w, config: ClipConfig):
    """Clip a waveform or sample array; returns ``(clipped, config)``.

    The threshold, unless fixed in ``config``, is taken from the mean power
    of the whole input (all polarisations together).  ``config.stats`` is
    updated in place.
    """
    fs = getattr(w, "fs", None)
    arr, was_1d = check_stream(w, "w")
    if config.threshold is None:
        config.threshold = threshold_from_cr(float(np.mean(np.abs(arr) ** 2)), config.cr_db)
    out, hits = clip_array(arr, config.threshold)
    config.stats = config.stats + ClipStats(arr.size, hits)
    result = restore_rank(out, was_1d)
    if isinstance(w, (Waveform, DualPolWaveform)):
        result = as_waveform_like(w, result, fs)
    return result, config


class SquareBoundaryClipper(TransformerMixin, BaseEstimator):
    """Transformer wrapper around square-boundary clipping.

    Parameters
    ----------
    cr_db : float, default=8.52
        Clipping ratio in dB relative to the RMS amplitude seen in ``fit``.
    threshold : float, optional
        Absolute amplitude threshold; overrides ``cr_db`` when given.

    Attributes
    ----------
    threshold_ : float
    stats_ : ClipStats
        Counters accumulated over every ``transform`` call.
    """

    def __init__(self, cr_db: float = 8.52, threshold: float | None = None):
        self.cr_db = cr_db
        self.threshold = threshold

    def fit(self, X, y=None):
        if self.threshold is not None:
            if not self.threshold > 0:
                raise ValueError(f"threshold must be > 0, got {self.threshold}")
            self.threshold_ = float(self.threshold)
        else:
            arr, _ = check_stream(X)
            self.threshold_ = threshold_from_cr(float(np.mean(np.abs(arr) ** 2)), self.cr_db)
        self.stats_ = ClipStats()
        return self

    def transform(self, X):
        check_is_fitted(self, "threshold_")
        arr, was_1d = check_stream(X)
        out, hits = clip_array(arr, self.threshold_)
        self.stats_ = self.stats_ + ClipStats(arr.size, hits)
        return restore_rank(out, was_1d)
