"""
Analytic relaxation and decoherence models.

Rates are in Hz, times in seconds, fields in tesla and temperatures in kelvin.
Functions accept scalars or numpy arrays for their first argument.
"""
import math
from dataclasses import dataclass

import numpy as np

from erspin.constants import HBAR, K_B_OVER_H, MU_0, MU_B, MU_B_OVER_H

# Y sites per m^3 in Y2O3 (32 cations in a cubic cell of 10.60 Å)
Y_SITE_DENSITY = 32.0 / (10.60e-10) ** 3
ID_PREFACTOR = math.pi / (9.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class T1Params:
    """Direct-phonon and flip-flop contributions to the spin relaxation rate."""
    r0: float
    r_ff: float
    r_d: float
    frequency: float

    def __post_init__(self):
        for name in ("r0", "r_ff", "r_d", "frequency"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")


@dataclass(frozen=True)
class SDParams:
    gamma_max: float = 0.0
    g_env: float = 0.0
    gamma_sd: float = 0.0
    flip_rate: float = 0.0
    gamma_0: float = 0.0

    def __post_init__(self):
        for name in ("gamma_max", "g_env", "gamma_sd", "flip_rate", "gamma_0"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")


@dataclass(frozen=True)
class IDRate:
    rate: float          # Hz
    g_squared: float


def _positive_temperature(T):
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise ValueError("temperature must be positive")
    return T


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def sech2(x):
    """sech²(x) written as 4e^{-2|x|}/(1+e^{-2|x|})², which does not overflow."""
    e = np.exp(-2.0 * np.abs(np.asarray(x, dtype=float)))
    return _scalar(4.0 * e / (1.0 + e) ** 2)


def coth(x):
    return _scalar(1.0 / np.tanh(np.asarray(x, dtype=float)))


def thermal_argument(energy_hz, T):
    """hf/(2 k_B T) for an energy given in Hz."""
    return np.asarray(energy_hz, dtype=float) / (2.0 * K_B_OVER_H * _positive_temperature(T))


def t1_rate(T, p: T1Params):
    """R0 + R_ff·sech²(hf/2k_BT) + R_D·coth(hf/2k_BT)."""
    x = thermal_argument(p.frequency, T)
    return _scalar(p.r0 + p.r_ff * sech2(x) + p.r_d * coth(x))


def gamma_sd(T, B: float, gamma_max: float, g_env: float):
    """Spectral-diffusion linewidth Γ_Max·sech²(g_env μB B / 2k_BT) of a partially polarized bath."""
    x = thermal_argument(g_env * MU_B_OVER_H * abs(B), T)
    return _scalar(gamma_max * sech2(x))


def t2_sd(gamma: float, flip_rate: float):
    """Spectral-diffusion limited T2 = 2/√(π Γ_SD R) of the Lorentz-diffusion model."""
    gamma = np.asarray(gamma, dtype=float)
    flip_rate = np.asarray(flip_rate, dtype=float)
    if np.any(gamma <= 0) or np.any(flip_rate <= 0):
        raise ValueError("Γ_SD and R must be positive")
    return _scalar(2.0 / np.sqrt(np.pi * gamma * flip_rate))


def t2_total(t2_sd_time, t2_id_time=math.inf, t1=math.inf):
    """1/T2 = 1/T2_SD + 1/T2_ID + 1/(2 T1); absent channels are passed as inf."""
    parts = [np.asarray(t2_sd_time, dtype=float), np.asarray(t2_id_time, dtype=float),
             2.0 * np.asarray(t1, dtype=float)]
    if any(np.any(p <= 0) for p in parts):
        raise ValueError("coherence and relaxation times must be positive")
    return _scalar(1.0 / sum(1.0 / p for p in parts))


def effective_linewidth(t_w, gamma_0: float, gamma: float, flip_rate: float):
    """Γ_0 + ½Γ_SD(1 − e^{−R T_w}), the linewidth seen by a stimulated echo."""
    t_w = np.asarray(t_w, dtype=float)
    if np.any(t_w < 0):
        raise ValueError("waiting time must be non-negative")
    return _scalar(gamma_0 + 0.5 * gamma * -np.expm1(-flip_rate * t_w))


def stretched_exponential(t, amplitude: float, t2: float, n: float):
    if t2 <= 0:
        raise ValueError(f"T2 must be positive, got {t2}")
    if not 0.5 <= n <= 4.0:
        raise ValueError(f"stretch factor must lie in [0.5, 4], got {n}")
    return _scalar(amplitude * np.exp(-(np.asarray(t, dtype=float) / t2) ** n))


# ---------------- INSTANTANEOUS DIFFUSION ----------------

def instantaneous_diffusion_rate(n_exc: float, g_eff: float) -> IDRate:
    """
    1/T2_ID = (π/9√3)·μ0·(g_eff μB)²·n_exc/ħ for an excited density n_exc in m⁻³.

    The rate scales as g_eff², returned alongside it.
    """
    if n_exc < 0:
        raise ValueError(f"excited density must be non-negative, got {n_exc}")
    g_squared = g_eff ** 2
    rate = ID_PREFACTOR * MU_0 * g_squared * MU_B ** 2 * n_exc / HBAR
    return IDRate(float(rate), float(g_squared))


def id_density_for(t2_id: float, g_eff: float) -> float:
    """Excited density that gives an instantaneous-diffusion limit of t2_id."""
    if t2_id <= 0:
        raise ValueError(f"T2_ID must be positive, got {t2_id}")
    per_density = instantaneous_diffusion_rate(1.0, g_eff).rate
    return 1.0 / (t2_id * per_density)


def excitation_density(dopant_ppm: float, isotope_purity: float = 0.95, site_fraction: float = 0.75,
                       hyperfine_occupancy: float = 1.0 / 16.0, spectral_fraction: float = 1.0,
                       host_density: float = Y_SITE_DENSITY) -> float:
    """Density of spins flipped by the pulses: dopants on the addressed isotope, site, hyperfine line and band."""
    factors = dict(isotope_purity=isotope_purity, site_fraction=site_fraction,
                   hyperfine_occupancy=hyperfine_occupancy, spectral_fraction=spectral_fraction)
    for name, value in factors.items():
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    if dopant_ppm < 0:
        raise ValueError(f"dopant concentration must be non-negative, got {dopant_ppm}")
    return dopant_ppm * 1e-6 * host_density * math.prod(factors.values())


def field_noise_bound(t2: float, g: float) -> float:
    """Field noise h/(π g μB T2), in tesla, that alone would limit coherence to t2."""
    if t2 <= 0:
        raise ValueError(f"T2 must be positive, got {t2}")
    return 1.0 / (math.pi * abs(g) * MU_B_OVER_H * t2)


def t2_temperature_model(T, t1_params: T1Params, gamma_max: float, g_env: float, B: float,
                         t2_id: float = math.inf):
    """
    T2 against temperature: spectral diffusion with bath flip rate R(T) = 1/T1(T)
    and linewidth Γ_SD(T), instantaneous diffusion, and the 2T1 limit.
    """
    rate = np.asarray(t1_rate(T, t1_params), dtype=float)
    width = np.asarray(gamma_sd(T, B, gamma_max, g_env), dtype=float)
    # a fully polarized bath (Γ_SD = 0) leaves no spectral-diffusion channel
    resolved = width > 0
    sd = np.where(resolved, t2_sd(np.where(resolved, width, 1.0), rate), np.inf)
    return t2_total(sd, t2_id, 1.0 / rate)
