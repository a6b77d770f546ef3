"""
Model fits for echo decays, relaxation and the temperature models.

The stretched exponential is parameterized as A·exp(-(t/T2)^n) with t the
total evolution time (2τ for a two-pulse echo).
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import nnls

from erspin.analysis.nlls import MAX_ITERATIONS, ResidualKind, nlls_fit
from erspin.analysis.traces import DecayTrace, FitResult, one_over_e_time
from erspin.constants import WORKING_FIELD, WORKING_FREQUENCY
from erspin.decoherence.models import (
    T1Params, coth, effective_linewidth, sech2, t1_rate, t2_temperature_model, thermal_argument,
)
from erspin.errors import TraceFormatError

logger = logging.getLogger(__name__)

MIN_POINTS = 4
DEFAULT_STRETCH = 1.5
STRETCH_BOUNDS = (0.5, 4.0)
RECOVERY_LEVEL = 1.0 - math.exp(-1.0)


def _require_points(trace: DecayTrace, kind: str) -> None:
    if len(trace) < MIN_POINTS:
        raise TraceFormatError(f"{kind} fit needs at least {MIN_POINTS} points, got {len(trace)}")


def _stretched(t, amplitude, t2, n):
    return amplitude * np.exp(-(t / t2) ** n)


def _recovery(t, amplitude, t1):
    return amplitude * -np.expm1(-t / t1)


def _linewidth(t_w, gamma_0, gamma, flip_rate):
    return effective_linewidth(t_w, gamma_0, gamma, flip_rate)


# ---------------- INITIAL GUESSES ----------------

def guess_stretched(trace: DecayTrace):
    x, y = trace.abscissa, trace.amplitude
    amplitude = float(max(y.max(), 1e-300))
    t2 = one_over_e_time(x, y, reference=amplitude) or 2.0 * float(x[-1])

    ratio = y / amplitude
    usable = (ratio > 0.05) & (ratio < 0.95) & (x > 0)
    n = DEFAULT_STRETCH
    if usable.sum() >= 2:
        slope = np.polyfit(np.log(x[usable]), np.log(-np.log(ratio[usable])), 1)[0]
        if np.isfinite(slope):
            n = float(np.clip(slope, *STRETCH_BOUNDS))
    return amplitude, t2, n


def guess_recovery(trace: DecayTrace):
    x, y = trace.abscissa, trace.amplitude
    amplitude = float(max(y.max(), 1e-300))
    above = np.nonzero(y >= RECOVERY_LEVEL * amplitude)[0]
    if len(above) == 0 or above[0] == 0:
        t1 = float(x[len(x) // 2])
    else:
        k = above[0]
        t1 = float(np.interp(RECOVERY_LEVEL * amplitude, y[k - 1:k + 1], x[k - 1:k + 1]))
    return amplitude, max(t1, 1e-300)


# ---------------- FITS ----------------

def fit_hahn_decay(trace: DecayTrace, fix_n: Optional[float] = None,
                   max_iterations: int = MAX_ITERATIONS) -> FitResult:
    """Stretched-exponential fit {A, T2, n}; fix_n holds the stretch factor."""
    _require_points(trace, "hahn")
    amplitude, t2, n = guess_stretched(trace)
    if fix_n is not None:
        if not STRETCH_BOUNDS[0] <= fix_n <= STRETCH_BOUNDS[1]:
            raise ValueError(f"stretch factor must lie in [0.5, 4], got {fix_n}")
        n = fix_n
    result = nlls_fit(
        _stretched, trace, [amplitude, t2, n],
        bounds=([0.0, 0.0, STRETCH_BOUNDS[0]], [np.inf, np.inf, STRETCH_BOUNDS[1]]),
        names=["A", "T2", "n"], kind="hahn",
        fixed={"n": fix_n} if fix_n is not None else None, max_iterations=max_iterations,
    )
    result.notes.append("model: A*exp(-(t/T2)^n)")
    return result


def fit_saturation_recovery(trace: DecayTrace, max_iterations: int = MAX_ITERATIONS) -> FitResult:
    """Saturation-recovery fit A·(1 − exp(−t/T1))."""
    _require_points(trace, "saturation")
    amplitude, t1 = guess_recovery(trace)
    result = nlls_fit(_recovery, trace, [amplitude, t1], bounds=([0.0, 0.0], [np.inf, np.inf]),
                      names=["A", "T1"], kind="saturation", max_iterations=max_iterations)
    result.notes.append("model: A*(1-exp(-t/T1))")
    return result


def fit_t1_temperature(trace: DecayTrace, frequency: float = WORKING_FREQUENCY,
                       max_iterations: int = MAX_ITERATIONS) -> FitResult:
    """
    Fits R0 + R_ff·sech²(hf/2k_BT) + R_D·coth(hf/2k_BT) to 1/T1.

    The trace holds temperatures (K) and T1 values (s). The iteration starts
    from a non-negative linear solve and minimizes relative residuals.
    """
    _require_points(trace, "t1-temperature")
    if np.any(trace.amplitude <= 0) or np.any(trace.abscissa <= 0):
        raise TraceFormatError("t1-temperature fit needs positive temperatures and T1 values")
    rates = DecayTrace(trace.abscissa, 1.0 / trace.amplitude, label=trace.label)

    x = thermal_argument(frequency, rates.abscissa)
    basis = np.column_stack([np.ones_like(x), sech2(x), coth(x)])
    seed, _ = nnls(basis / rates.amplitude[:, None], np.ones_like(x))

    def model(T, r0, r_ff, r_d):
        return t1_rate(T, T1Params(r0, r_ff, r_d, frequency))

    result = nlls_fit(model, rates, seed, bounds=([0.0] * 3, [np.inf] * 3),
                      names=["R0", "R_ff", "R_D"], kind="t1-temperature",
                      residual=ResidualKind.RELATIVE, max_iterations=max_iterations)
    result.notes.append(f"frequency_Hz = {frequency:.6g}")
    return result


def _grid_start(model: Callable, trace: DecayTrace, gammas: np.ndarray, g_values: np.ndarray):
    target = np.log(trace.amplitude)
    best, start = np.inf, (gammas[0], g_values[0])
    for g_env in g_values:
        for gamma in gammas:
            cost = np.sum((np.log(model(trace.abscissa, gamma, g_env)) - target) ** 2)
            if cost < best:
                best, start = cost, (gamma, g_env)
    return start


def fit_t2_temperature(trace: DecayTrace, t1_params: T1Params, t2_id: float = math.inf,
                       field: float = WORKING_FIELD, initial: Optional[Sequence[float]] = None,
                       max_iterations: int = MAX_ITERATIONS) -> FitResult:
    """
    Fits {Γ_Max, g_env} of the spectral-diffusion model composed with the
    T1 fit (bath flip rate R = 1/T1), the ID limit t2_id and 2T1, to log T2.
    """
    _require_points(trace, "t2-temperature")
    if np.any(trace.amplitude <= 0):
        raise TraceFormatError("t2-temperature fit needs positive T2 values")

    def model(T, gamma_max, g_env):
        return t2_temperature_model(T, t1_params, gamma_max, g_env, field, t2_id)

    if initial is None:
        initial = _grid_start(model, trace, np.geomspace(1e4, 1e8, 33), np.linspace(0.1, 4.0, 40))
    result = nlls_fit(model, trace, list(initial), bounds=([0.0, 0.0], [np.inf, np.inf]),
                      names=["Gamma_max", "g_env"], kind="t2-temperature",
                      residual=ResidualKind.LOG, max_iterations=max_iterations)
    result.notes.append(f"field_T = {field:.6g}")
    result.notes.append(f"t2_id_s = {t2_id:.6g}")
    return result


def fit_spectral_diffusion(trace: DecayTrace, max_iterations: int = MAX_ITERATIONS) -> FitResult:
    """Fits Γ_0 + ½Γ_SD(1 − e^{−R T_w}) to linewidths measured at waiting times T_w."""
    _require_points(trace, "spectral-diffusion")
    x, y = trace.abscissa, trace.amplitude
    gamma_0 = float(max(y.min(), 0.0))
    gamma = float(max(2.0 * (y.max() - gamma_0), 1e-300))
    half = gamma_0 + 0.25 * gamma
    k = int(np.argmax(y >= half))
    t_half = float(x[k]) if k > 0 else float(x[len(x) // 2])
    flip_rate = math.log(2.0) / max(t_half, 1e-300)

    result = nlls_fit(_linewidth, trace, [gamma_0, gamma, flip_rate],
                      bounds=([0.0] * 3, [np.inf] * 3),
                      names=["Gamma_0", "Gamma_SD", "R"], kind="spectral-diffusion",
                      max_iterations=max_iterations)

    flip_time = 1.0 / result["R"]
    if not (x[0] <= flip_time / math.sqrt(10.0) and x[-1] >= flip_time * math.sqrt(10.0)):
        logger.warning(
            f"Waiting times do not span a decade around 1/R | 1/R={flip_time:.4g}s | "
            f"t_w_range=({x[0]:.4g}, {x[-1]:.4g})s"
        )
        result.notes.append("waiting-time range does not resolve R")
    return result


FIT_KINDS: Dict[str, Callable[..., FitResult]] = {
    "hahn": fit_hahn_decay,
    "saturation": fit_saturation_recovery,
    "t1-temperature": fit_t1_temperature,
    "t2-temperature": fit_t2_temperature,
    "spectral-diffusion": fit_spectral_diffusion,
}


def fit_batch(traces: Sequence[DecayTrace], kind: str, n_jobs: int = 1, **kwargs) -> List[FitResult]:
    """Runs independent fits of one kind; results keep the order of traces."""
    fit = FIT_KINDS[kind]
    return Parallel(n_jobs=n_jobs)(delayed(fit)(trace, **kwargs) for trace in traces)
