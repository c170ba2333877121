"""Payload bit sources."""
from __future__ import annotations

import numpy as np

PRBS23_TAPS = (23, 18)  # x^23 + x^18 + 1


def lfsr23_bits(length: int, state: int) -> np.ndarray:
    """PRBS-23 stream with b[n] = b[n-23] xor b[n-18].

    The first 23 output bits are the seed state, LSB first.  The recurrence
    is evaluated 18 bits at a time, which is the longest run whose inputs
    are all already known.
    """
    state &= (1 << 23) - 1
    if state == 0:
        raise ValueError("PRBS-23 seed state must be nonzero")
    out = np.empty(max(length, 23) + 18, dtype=np.uint8)
    out[:23] = (state >> np.arange(23)) & 1
    n = 23
    while n < length:
        out[n : n + 18] = out[n - 23 : n - 5] ^ out[n - 18 : n]
        n += 18
    return out[:length].copy()


def lfsr23_transition_matrix() -> np.ndarray:
    """23x23 GF(2) matrix advancing the state (b[n-23..n-1]) by one bit."""
    m = np.zeros((23, 23), dtype=np.uint8)
    m[np.arange(22), np.arange(1, 23)] = 1  # shift
    m[22, 0] = 1  # b[n-23]
    m[22, 23 - 18] = 1  # b[n-18]
    return m


def generate_prbs(length: int, seed: int, mode: str = "prng") -> np.ndarray:
    """Payload bits as a uint8 array of 0/1.

    ``prng`` draws uniform bits from a seeded generator; ``lfsr23`` runs the
    PRBS-23 register from state ``seed`` (must be nonzero modulo 2^23).
    """
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    if mode == "prng":
        return np.random.default_rng(seed).integers(0, 2, size=length, dtype=np.uint8)
    if mode == "lfsr23":
        return lfsr23_bits(length, seed)
    raise ValueError(f"mode must be 'prng' or 'lfsr23', got {mode!r}")
