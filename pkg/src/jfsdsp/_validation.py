"""Input coercion helpers shared by the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError

from .waveform import DualPolWaveform, Waveform


def check_stream(X, name: str = "X") -> tuple[np.ndarray, bool]:
    """Coerce a symbol or sample stream to a complex ``(n, n_pol)`` array.

    Returns the 2-D array and whether the input was 1-D, so callers can
    hand back the same rank they received.  Waveform containers are
    unwrapped.
    """
    if isinstance(X, Waveform):
        X = X.samples
    elif isinstance(X, DualPolWaveform):
        X = X.as_array()
    arr = np.asarray(X)
    if arr.dtype == object:
        raise TypeError(f"{name} must be numeric, got dtype=object")
    arr = arr.astype(np.complex128, copy=False)
    if arr.ndim not in (1, 2):
        raise ValueError(f"{name} must be 1-D or 2-D (n, n_pol), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or inf")
    if arr.ndim == 1:
        return arr[:, None], True
    return arr, False


def restore_rank(arr: np.ndarray, was_1d: bool) -> np.ndarray:
    return arr[:, 0] if was_1d else arr


def check_is_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call 'fit' first."
        )


def as_waveform_like(template, samples: np.ndarray, fs: float):
    """Wrap ``samples`` in the same container type as ``template``."""
    if isinstance(template, DualPolWaveform):
        return DualPolWaveform.from_array(samples, fs)
    if isinstance(template, Waveform):
        return Waveform(samples if samples.ndim == 1 else samples[:, 0], fs)
    return samples
