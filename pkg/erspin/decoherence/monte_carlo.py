"""
Sudden-jump spectral-diffusion simulation.

The detuning of the probed spin is a sum of couplings c_j·s_j over a bath of
two-state spins. Each bath spin redraws its state s_j = ±1 at Poisson rate R.
With Cauchy-distributed couplings the summed detuning is Lorentzian with
full width Γ_SD, and a Hahn echo decays as exp(-π Γ_SD R τ²) for R·2τ ≪ 1.
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from erspin.analysis.traces import DecayTrace
from erspin.constants import TWO_PI
from erspin.decoherence.models import t2_sd
from erspin.sequences.pulses import PulseSequence
from erspin.sequences.toggling import sign_function

logger = logging.getLogger(__name__)

MIN_TRIALS = 1000
DEFAULT_CHUNK = 1000


@dataclass(frozen=True)
class BathSpec:
    """
    Bath of two-state spins. Without explicit couplings, bath_size couplings
    are drawn per trial from a Cauchy law scaled to the Lorentzian full width.
    """
    flip_rate: float                          # R, Hz
    gamma_sd: float                           # Γ_SD, Hz (FWHM)
    bath_size: int = 10_000
    couplings: Optional[np.ndarray] = None    # Hz, discrete bath

    def __post_init__(self):
        if self.flip_rate <= 0:
            raise ValueError(f"flip rate must be positive, got {self.flip_rate}")
        if self.gamma_sd <= 0:
            raise ValueError(f"Γ_SD must be positive, got {self.gamma_sd}")
        if self.bath_size < 1:
            raise ValueError(f"bath size must be at least 1, got {self.bath_size}")

    @property
    def size(self) -> int:
        return self.bath_size if self.couplings is None else len(self.couplings)

    @property
    def coupling_scale(self) -> float:
        """Cauchy scale of a single coupling, in Hz."""
        return 0.5 * self.gamma_sd / self.bath_size


class _SignIntegral:
    """G_T(t) = ∫_0^t f_T(t') dt' for the sequence stretched to total time T."""

    def __init__(self, seq: PulseSequence):
        unit = seq.rescaled(1.0)
        edges, signs = sign_function(unit)
        self.edges = edges - edges[0]
        self.values = np.concatenate([[0.0], np.cumsum(signs * np.diff(self.edges))])

    def __call__(self, t: np.ndarray, total: float) -> np.ndarray:
        return total * np.interp(np.minimum(t, total) / total, self.edges, self.values)


def _event_times(rng: np.random.Generator, count: int, rate: float, horizon: float) -> np.ndarray:
    """Redraw times of spins known to redraw at least once before horizon, padded with horizon."""
    p = -math.expm1(-rate * horizon)
    first = -np.log1p(-rng.random(count) * p) / rate
    columns = [first]
    current = first
    while True:
        current = current + rng.exponential(1.0 / rate, count)
        if not np.any(current < horizon):
            break
        columns.append(np.where(current < horizon, current, horizon))
        current = np.minimum(current, horizon)
    return np.column_stack(columns)


def _run_chunk(bath: BathSpec, integral: _SignIntegral, times: np.ndarray, trials: int,
               seed: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed)
    horizon = float(times[-1])
    p_active = -math.expm1(-bath.flip_rate * horizon)

    if bath.couplings is None:
        active = rng.binomial(bath.size, p_active, size=trials)
        owner = np.repeat(np.arange(trials), active)
        couplings = bath.coupling_scale * rng.standard_cauchy(len(owner))
        static = bath.coupling_scale * (bath.size - active) * rng.standard_cauchy(trials)
    else:
        base = np.asarray(bath.couplings, dtype=float)
        mask = rng.random((trials, len(base))) < p_active
        states = rng.choice([-1.0, 1.0], size=(trials, len(base)))
        static = np.sum(np.where(mask, 0.0, base * states), axis=1)
        owner, index = np.nonzero(mask)
        couplings = base[index]

    events = _event_times(rng, len(owner), bath.flip_rate, horizon)
    states = rng.choice([-1.0, 1.0], size=(len(owner), events.shape[1] + 1))
    bounds = np.column_stack([np.zeros(len(owner)), events, np.full(len(owner), horizon)])

    cosines = np.empty((trials, len(times)))
    for n, total in enumerate(times):
        g = integral(bounds, total)
        per_spin = couplings * np.sum(states * np.diff(g, axis=1), axis=1)
        phase = np.bincount(owner, weights=per_spin, minlength=trials).astype(float)
        phase += static * integral(np.array([total]), total)[0]
        cosines[:, n] = np.cos(TWO_PI * phase)
    return cosines


def default_total_times(bath: BathSpec, points: int = 24) -> np.ndarray:
    """Total times up to 2.5 times the Lorentz-diffusion T2 of the bath."""
    return np.linspace(0.0, 2.5 * t2_sd(bath.gamma_sd, bath.flip_rate), points + 1)[1:]


def sudden_jump_monte_carlo(bath: BathSpec, seq: PulseSequence, trials: int, seed: int,
                            total_times: Optional[Sequence[float]] = None,
                            chunk_size: int = DEFAULT_CHUNK, n_jobs: int = 1) -> DecayTrace:
    """
    Mean echo amplitude against total evolution time.

    Trials run in chunks, each seeded from a child of SeedSequence(seed), and
    are reduced in chunk order, so the result depends only on the seed and
    chunk size. sigma is the standard error of the mean.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"at least {MIN_TRIALS} trials are required, got {trials}")
    times = default_total_times(bath) if total_times is None else np.asarray(total_times, dtype=float)
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("total times must be positive and strictly increasing")

    start_time = time.time()
    sizes = [chunk_size] * (trials // chunk_size)
    if trials % chunk_size:
        sizes.append(trials % chunk_size)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    integral = _SignIntegral(seq)

    chunks = Parallel(n_jobs=n_jobs)(
        delayed(_run_chunk)(bath, integral, times, size, child) for size, child in zip(sizes, seeds)
    )
    cosines = np.vstack(chunks)
    amplitude = cosines.mean(axis=0)
    sigma = cosines.std(axis=0, ddof=1) / math.sqrt(trials)

    logger.info(
        f"Sudden-jump simulation completed | sequence={seq.label} | trials={trials} | "
        f"chunks={len(sizes)} | seed={seed} | duration={round(time.time() - start_time, 2)}s"
    )
    return DecayTrace(times, amplitude, sigma, label=f"monte-carlo-{seq.label}")
