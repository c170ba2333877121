"""Sample-stream containers passed between the TX, channel and RX stages."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Waveform:
    """Complex baseband samples at sample rate ``fs`` [Hz]."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1:
            raise ValueError(f"Waveform samples must be 1-D, got shape {samples.shape}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class DualPolWaveform:
    """Two polarisation tributaries sharing one sample clock."""

    x_pol: Waveform
    y_pol: Waveform

    def __post_init__(self):
        if len(self.x_pol) != len(self.y_pol):
            raise ValueError(
                f"polarisation lengths differ: {len(self.x_pol)} vs {len(self.y_pol)}"
            )
        if self.x_pol.fs != self.y_pol.fs:
            raise ValueError(f"sample rates differ: {self.x_pol.fs} vs {self.y_pol.fs}")

    @classmethod
    def from_array(cls, samples: np.ndarray, fs: float) -> "DualPolWaveform":
        samples = np.asarray(samples)
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise ValueError(f"expected shape (n, 2), got {samples.shape}")
        return cls(Waveform(samples[:, 0], fs), Waveform(samples[:, 1], fs))

    @property
    def fs(self) -> float:
        return self.x_pol.fs

    def __len__(self):
        return len(self.x_pol)

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.x_pol.samples, self.y_pol.samples])

    def power(self) -> float:
        """Mean total power summed over both polarisations."""
        return self.x_pol.power() + self.y_pol.power()

    def energy(self) -> float:
        return self.x_pol.energy() + self.y_pol.energy()
