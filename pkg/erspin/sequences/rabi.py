import logging
from dataclasses import dataclass

import numpy as np

from erspin.constants import MU_B_OVER_H

logger = logging.getLogger(__name__)


@dataclass
class RabiCurve:
    pulse_lengths: np.ndarray   # s
    amplitude: np.ndarray       # normalized echo amplitude
    rabi_frequency: float       # Hz


def rabi_frequency(g_transverse: float, b1: float) -> float:
    """Ω = g_t·μB·B1/(2h) in Hz for a linearly polarized drive of amplitude b1 (T)."""
    if b1 < 0:
        raise ValueError(f"drive amplitude must be non-negative, got {b1}")
    return abs(g_transverse) * MU_B_OVER_H * b1 / 2.0


def drive_field_for(g_transverse: float, frequency: float) -> float:
    """Drive amplitude in tesla that gives the Rabi frequency `frequency`."""
    if g_transverse == 0:
        raise ValueError("transverse g must be non-zero")
    return 2.0 * frequency / (abs(g_transverse) * MU_B_OVER_H)


def rabi_nutation(g_transverse: float, b1: float, pulse_lengths) -> RabiCurve:
    """
    Echo amplitude against refocusing pulse length.

    A pulse of length t_p rotates by θ = 2πΩt_p; the refocused fraction of
    the echo is sin²(θ/2).
    """
    lengths = np.asarray(pulse_lengths, dtype=float)
    if np.any(lengths < 0):
        raise ValueError("pulse lengths must be non-negative")
    omega = rabi_frequency(g_transverse, b1)
    amplitude = np.sin(np.pi * omega * lengths) ** 2
    logger.info(
        f"Rabi nutation | g_t={g_transverse} | b1={b1:.4g}T | rabi_frequency={omega:.6g}Hz | "
        f"points={len(lengths)}"
    )
    return RabiCurve(lengths, amplitude, omega)
