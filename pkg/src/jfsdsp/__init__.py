"""Joint frequency-domain pulse shaping and chromatic-dispersion pre-compensation.

Simulation toolkit for a dual-polarisation 16QAM coherent link whose
transmitter shapes and pre-compensates each symbol block with a single
FFT/IFFT pair, followed by optional square-boundary clipping.
"""
from .cascade import CascadePrecompensator, cascade_precompensate, fd_cd_filter, rc_fir_taps
from .channel import apply_channel
from .filters import PRECOMPENSATE, PROPAGATE, JointFilter, build_joint_filter
from .jfscd import JointShapingPrecompensator, run_stream
from .link import LinkResult, simulate_link
from .params import ConfigError, DerivedConstants, SystemConfig, validate
from .rxdsp import Lms2x2Equalizer
from .sbc import SquareBoundaryClipper
from .waveform import DualPolWaveform, Waveform

__version__ = "0.1.0"

__all__ = [
    "CascadePrecompensator",
    "ConfigError",
    "DerivedConstants",
    "DualPolWaveform",
    "JointFilter",
    "JointShapingPrecompensator",
    "LinkResult",
    "Lms2x2Equalizer",
    "PRECOMPENSATE",
    "PROPAGATE",
    "SquareBoundaryClipper",
    "SystemConfig",
    "Waveform",
    "apply_channel",
    "build_joint_filter",
    "cascade_precompensate",
    "fd_cd_filter",
    "rc_fir_taps",
    "run_stream",
    "simulate_link",
    "validate",
]
