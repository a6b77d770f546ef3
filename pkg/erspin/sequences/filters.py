"""
Filter functions of ideal pulse sequences.

Convention: the weight is W(ω) = |∫ f(t) e^{iωt} dt|² in s², f(t) being the
sign function of the sequence. The dephasing of a one-sided noise PSD S(ω)
is χ = (1/π) ∫_0^∞ S(ω) W(ω) dω, and the coherence is exp(-χ).
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from erspin.analysis.traces import one_over_e_time
from erspin.constants import TWO_PI
from erspin.sequences.pulses import PulseSequence
from erspin.sequences.toggling import sign_function

logger = logging.getLogger(__name__)

GRID_SPAN = 50.0          # multiples of 1/(shortest interval)
GRID_OVERSAMPLING = 16.0  # points per 1/T
MAX_GRID_POINTS = 400_001
COVERAGE_THRESHOLD = 0.9
PREDICTION_POINTS = 400_000


@dataclass
class FilterFunction:
    frequencies: np.ndarray   # Hz
    weight: np.ndarray        # s^2
    sequence: PulseSequence
    normalization: float      # ∫ f(t)^2 dt in s

    @property
    def parseval_ratio(self) -> float:
        """(1/π)∫W dω over the grid divided by the sign-function energy."""
        if self.normalization == 0:
            return math.nan
        return float(2.0 * trapezoid(self.weight, self.frequencies) / self.normalization)

    @property
    def dc_limit(self) -> float:
        """|time average of f(t)|, from the weight at zero frequency."""
        return math.sqrt(filter_weight(self.sequence, np.zeros(1))[0]) / self.sequence.duration


@dataclass
class CoherenceCurve:
    times: np.ndarray        # s
    coherence: np.ndarray
    chi: np.ndarray

    def t2(self) -> Optional[float]:
        """Time at which the coherence crosses 1/e, log-interpolated; None if it never does."""
        return one_over_e_time(self.times, self.coherence, reference=1.0)


def _sign_intervals(seq: PulseSequence):
    edges, signs = sign_function(seq)
    edges = edges - edges[0]
    durations = np.diff(edges)
    keep = durations > 0
    return signs[keep], durations[keep], (edges[:-1] + 0.5 * np.diff(edges))[keep]


def filter_weight(seq: PulseSequence, frequencies: np.ndarray) -> np.ndarray:
    """|Σ_k f_k Δ_k e^{iω m_k} sinc(ωΔ_k/2)|² evaluated at frequencies in Hz."""
    signs, durations, midpoints = _sign_intervals(seq)
    omega = TWO_PI * np.asarray(frequencies, dtype=float)
    amplitude = np.zeros(omega.shape, dtype=complex)
    for f_k, d_k, m_k in zip(signs, durations, midpoints):
        if f_k == 0.0:
            continue
        amplitude += f_k * d_k * np.exp(1j * omega * m_k) * np.sinc(omega * d_k / (2.0 * np.pi))
    return np.abs(amplitude) ** 2


def sign_energy(seq: PulseSequence) -> float:
    signs, durations, _ = _sign_intervals(seq)
    return float(np.sum(signs ** 2 * durations))


def default_frequency_grid(seq: PulseSequence) -> np.ndarray:
    """0 … 50/(shortest interval) Hz in steps of 1/(16 T)."""
    _, durations, _ = _sign_intervals(seq)
    f_max = GRID_SPAN / durations.min()
    step = 1.0 / (GRID_OVERSAMPLING * seq.duration)
    points = min(int(math.ceil(f_max / step)) + 1, MAX_GRID_POINTS)
    return np.linspace(0.0, f_max, points)


def filter_function(seq: PulseSequence, frequencies: Optional[np.ndarray] = None) -> FilterFunction:
    grid = default_frequency_grid(seq) if frequencies is None else np.asarray(frequencies, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("frequency grid must be strictly increasing")
    result = FilterFunction(grid, filter_weight(seq, grid), seq, sign_energy(seq))
    logger.debug(
        f"Filter function computed | sequence={seq.label} | points={len(grid)} | "
        f"f_max={grid[-1]:.6g}Hz"
    )
    return result


def center_frequency(seq_or_filter) -> float:
    """Frequency of the largest filter weight above DC, refined between grid neighbours."""
    ff = seq_or_filter if isinstance(seq_or_filter, FilterFunction) else filter_function(seq_or_filter)
    positive = np.nonzero(ff.frequencies > 0)[0]
    k = positive[int(np.argmax(ff.weight[positive]))]
    lo = ff.frequencies[max(k - 1, positive[0])]
    hi = ff.frequencies[min(k + 1, len(ff.frequencies) - 1)]
    if hi <= lo:
        return float(ff.frequencies[k])
    refined = minimize_scalar(lambda f: -filter_weight(ff.sequence, np.array([f]))[0],
                              bounds=(lo, hi), method="bounded", options={"xatol": 1e-9 * hi})
    return float(refined.x) if -refined.fun >= ff.weight[k] else float(ff.frequencies[k])


def _half_crossing(f: np.ndarray, w: np.ndarray, i: int, j: int, half: float) -> float:
    # linear interpolation between grid points i (above half) and j (below)
    return float(f[i] + (half - w[i]) / (w[j] - w[i]) * (f[j] - f[i]))


def passband_width(seq_or_filter) -> float:
    """Full width at half maximum of the main lobe, in Hz."""
    ff = seq_or_filter if isinstance(seq_or_filter, FilterFunction) else filter_function(seq_or_filter)
    f, w = ff.frequencies, ff.weight
    positive = np.nonzero(f > 0)[0]
    k = positive[int(np.argmax(w[positive]))]
    half = 0.5 * w[k]

    left = k
    while left > 0 and w[left - 1] > half:
        left -= 1
    right = k
    while right < len(w) - 1 and w[right + 1] > half:
        right += 1
    low = f[0] if left == 0 else _half_crossing(f, w, left, left - 1, half)
    if right == len(w) - 1:
        logger.warning(f"Main lobe extends past the frequency grid | sequence={ff.sequence.label}")
        high = f[-1]
    else:
        high = _half_crossing(f, w, right, right + 1, half)
    return float(high - low)


def predict_coherence(filter_fn: FilterFunction, psd, total_times: Sequence[float]) -> CoherenceCurve:
    """
    Coherence exp(-χ(T)) of the filter's sequence stretched to each total time.

    The PSD is linearly interpolated and taken as zero outside its frequency
    coverage; a warning is logged when the covered part holds less than 90%
    of the filter energy.
    """
    times = np.asarray(total_times, dtype=float)
    if np.any(times <= 0):
        raise ValueError("total times must be positive")
    psd_f = np.asarray(psd.frequencies, dtype=float)
    psd_s = np.asarray(psd.values, dtype=float)
    f_max = psd_f[-1]

    chi = np.zeros_like(times)
    worst = 1.0
    for n, total in enumerate(times):
        seq = filter_fn.sequence.rescaled(total)
        step = max(1.0 / (GRID_OVERSAMPLING * total), f_max / PREDICTION_POINTS)
        grid = np.arange(0.0, f_max + 0.5 * step, step)
        weight = filter_weight(seq, grid)
        spectrum = np.interp(grid, psd_f, psd_s, left=0.0, right=0.0)
        chi[n] = 2.0 * trapezoid(spectrum * weight, grid)

        energy = sign_energy(seq)
        if energy > 0:
            covered = (grid >= psd_f[0]) & (grid <= f_max)
            fraction = 2.0 * trapezoid(weight[covered], grid[covered]) / energy if covered.sum() > 1 else 0.0
            worst = min(worst, fraction)

    if worst < COVERAGE_THRESHOLD:
        logger.warning(
            f"PSD does not cover the filter passband | sequence={filter_fn.sequence.label} | "
            f"covered_fraction={worst:.3f} | psd_range=({psd_f[0]:.6g}, {f_max:.6g})Hz"
        )
    logger.info(
        f"Coherence predicted | sequence={filter_fn.sequence.label} | points={len(times)} | "
        f"chi_max={chi.max():.4g}"
    )
    return CoherenceCurve(times, np.exp(-chi), chi)
