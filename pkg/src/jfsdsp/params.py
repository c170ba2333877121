"""System configuration, validation and derived constants.

Every other module takes its physical and DSP parameters from a
:class:`SystemConfig`.  Defaults reproduce the 36 GBaud, 2 SPS, 100 km
simulation point.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

SPEED_OF_LIGHT = 299792458.0  # m/s


class ConfigError(ValueError):
    """Raised when a configuration field violates its validity domain."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class SystemConfig:
    """Physical and DSP parameters of one simulated link.

    Units are SI unless stated otherwise.  ``dispersion_D`` is in
    ps/(nm km) and ``osnr_db`` is referenced to ``ref_bandwidth``.
    ``overlap_symbols=None`` selects :func:`default_overlap`.
    ``cr_db=None`` disables square-boundary clipping.
    """

    baud_rate: float = 36e9
    sps: int = 2
    rolloff: float = 0.2
    dispersion_D: float = 16.0
    wavelength: float = SPEED_OF_LIGHT / 193.1e12
    fiber_length: float = 100e3
    linewidth: float = 100e3
    freq_offset: float = 1e9
    osnr_db: float = 23.0
    ref_bandwidth: float = 12.5e9
    block_symbols: int = 128
    overlap_symbols: int | None = None
    dgd: float = 0.0
    seed: int = 0
    modulation: str = "QAM16"
    n_symbols: int = 2**16
    shaping: str = "rc"
    cr_db: float | None = None

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], f"unknown configuration key(s) {unknown}")
        return cls(**dict(data))

    @classmethod
    def from_json(cls, path: str | Path) -> "SystemConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config document must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def replace(self, **changes: Any) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DerivedConstants:
    """Quantities computed once from a validated :class:`SystemConfig`."""

    beta2: float
    ts: float
    fs: float
    omega_grid_2n: np.ndarray = field(repr=False)
    overlap_symbols: int
    block_symbols: int
    config: SystemConfig = field(repr=False)


def derive_beta2(D: float, wavelength: float) -> float:
    """Group-velocity dispersion beta2 [s^2/m] from D [ps/(nm km)].

    Uses beta2 = -D lambda^2 / (2 pi c).
    """
    if not (math.isfinite(D) and math.isfinite(wavelength)):
        raise ConfigError("dispersion_D", "D and wavelength must be finite")
    if wavelength <= 0:
        raise ConfigError("wavelength", f"must be > 0, got {wavelength}")
    d_si = D * 1e-6  # ps/(nm km) -> s/m^2
    return -d_si * wavelength**2 / (2 * math.pi * SPEED_OF_LIGHT)


def omega_grid(n_points: int, fs: float) -> np.ndarray:
    """Angular frequencies of an unshifted ``n_points`` DFT at rate ``fs``.

    DC sits at index 0 and the upper half wraps to negative frequency; the
    Nyquist bin (even ``n_points``) is taken as +fs/2 so the grid covers
    (-fs/2, fs/2].
    """
    k = np.arange(n_points)
    signed = np.where(k <= n_points // 2, k, k - n_points)
    return 2 * np.pi * fs * signed / n_points


def default_overlap(beta2: float, fiber_length: float, ts: float, rolloff: float) -> int:
    """Overlap V per side in symbols: twice the band-edge CD group-delay spread."""
    spread = abs(beta2) * fiber_length * math.pi * (1 + rolloff) / ts**2
    # guard against 19.999999999 -> 20 style round-off pushing ceil up a symbol
    return int(math.ceil(round(2 * spread, 9)))


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def validate(config: SystemConfig) -> DerivedConstants:
    """Check every invariant of ``config`` and return its derived constants."""
    c = config
    for name in ("baud_rate", "wavelength", "ref_bandwidth"):
        value = getattr(c, name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ConfigError(name, f"must be a finite positive number, got {value!r}")
    if c.sps != 2:
        raise ConfigError("sps", f"only sps=2 is supported, got {c.sps}")
    if not (isinstance(c.rolloff, (int, float)) and 0 < c.rolloff <= 1):
        raise ConfigError("rolloff", f"must lie in (0, 1], got {c.rolloff!r}")
    if not (math.isfinite(c.fiber_length) and c.fiber_length >= 0):
        raise ConfigError("fiber_length", f"must be finite and >= 0, got {c.fiber_length}")
    if not math.isfinite(c.dispersion_D):
        raise ConfigError("dispersion_D", "must be finite")
    if not math.isfinite(c.osnr_db):
        raise ConfigError("osnr_db", f"must be finite, got {c.osnr_db}")
    for name in ("linewidth", "dgd"):
        value = getattr(c, name)
        if not (math.isfinite(value) and value >= 0):
            raise ConfigError(name, f"must be finite and >= 0, got {value}")
    if not math.isfinite(c.freq_offset):
        raise ConfigError("freq_offset", "must be finite")
    if not isinstance(c.block_symbols, int) or not _is_pow2(c.block_symbols):
        raise ConfigError("block_symbols", f"must be a power of two, got {c.block_symbols!r}")
    if not isinstance(c.seed, int) or c.seed < 0:
        raise ConfigError("seed", f"must be a non-negative integer, got {c.seed!r}")
    if c.modulation != "QAM16":
        raise ConfigError("modulation", f"only 'QAM16' is supported, got {c.modulation!r}")
    if c.shaping not in ("rc", "rrc"):
        raise ConfigError("shaping", f"must be 'rc' or 'rrc', got {c.shaping!r}")
    if not isinstance(c.n_symbols, int) or c.n_symbols <= 0:
        raise ConfigError("n_symbols", f"must be a positive integer, got {c.n_symbols!r}")
    if c.cr_db is not None and not math.isfinite(c.cr_db):
        raise ConfigError("cr_db", "must be finite or null")

    ts = 1.0 / c.baud_rate
    fs = c.baud_rate * c.sps
    beta2 = derive_beta2(c.dispersion_D, c.wavelength)
    if c.overlap_symbols is None:
        overlap = default_overlap(beta2, c.fiber_length, ts, c.rolloff)
    else:
        overlap = c.overlap_symbols
        if not isinstance(overlap, int) or overlap < 0:
            raise ConfigError("overlap_symbols", f"must be a non-negative integer, got {overlap!r}")
    if c.block_symbols < 4 * overlap:
        raise ConfigError(
            "block_symbols",
            f"must be >= 4*overlap_symbols = {4 * overlap}, got {c.block_symbols}",
        )
    if c.n_symbols < c.block_symbols - 2 * overlap:
        raise ConfigError(
            "n_symbols",
            f"must be >= one frame payload ({c.block_symbols - 2 * overlap}), got {c.n_symbols}",
        )
    return DerivedConstants(
        beta2=beta2,
        ts=ts,
        fs=fs,
        omega_grid_2n=omega_grid(2 * c.block_symbols, fs),
        overlap_symbols=overlap,
        block_symbols=c.block_symbols,
        config=c,
    )
