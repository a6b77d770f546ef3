import logging
from typing import List, Tuple

import numpy as np

from erspin.constants import K_B_OVER_H, MU_B_OVER_H, MU_N_OVER_H, WORKING_TEMPERATURE
from erspin.spin.hamiltonian import build_hamiltonian, eigensystem, track_levels
from erspin.spin.operators import perpendicular_axis, spin_vector
from erspin.spin.system import FieldPoint, FieldSensitivity, SpinSystem, Transition

logger = logging.getLogger(__name__)

MIN_STEP = 1e-6                # T
RELATIVE_STEP = 1e-4
RICHARDSON_TOLERANCE = 1e-3
DEGENERACY_FACTOR = 10.0


def polarization(g: float, B: float, T: float) -> float:
    """Thermal polarization tanh(gμB|B| / 2kBT) of an effective spin-1/2."""
    if T <= 0:
        raise ValueError(f"temperature must be positive, got {T}")
    return float(np.tanh(abs(g) * MU_B_OVER_H * abs(B) / (2.0 * K_B_OVER_H * T)))


def thermal_populations(energies: np.ndarray, T: float) -> np.ndarray:
    """Boltzmann populations of levels given in Hz."""
    if T <= 0:
        raise ValueError(f"temperature must be positive, got {T}")
    energies = np.asarray(energies, dtype=float)
    weights = np.exp(-(energies - energies.min()) / (K_B_OVER_H * T))
    return weights / weights.sum()


def drive_operator(sys: SpinSystem, axis) -> np.ndarray:
    """Electron spin component along axis, embedded in the full space."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    s_ops = spin_vector(sys.electron_spin)
    s_axis = np.tensordot(axis, s_ops, axes=1)
    return np.kron(s_axis, np.eye(sys.nuclear_dim))


def _gap_following(sys: SpinSystem, B: FieldPoint, magnitude: float, pair: Tuple[int, int],
                   ref_energies: np.ndarray, ref_vectors: np.ndarray) -> float:
    energies, vectors = eigensystem(build_hamiltonian(sys, B.with_magnitude(magnitude)))
    perm, _ = track_levels(ref_energies, ref_vectors, vectors)
    lo, hi = pair
    return float(energies[perm[hi]] - energies[perm[lo]])


def field_sensitivity(sys: SpinSystem, B: FieldPoint, pair: Tuple[int, int]) -> FieldSensitivity:
    """
    Derivative of the gap between a level pair along the field direction.

    Uses a central difference with step max(1e-6 T, 1e-4·B), refined by
    Richardson extrapolation against the half step. Levels at the stencil
    points are matched to the states at B by eigenvector overlap.
    """
    energies, vectors = eigensystem(build_hamiltonian(sys, B))
    lo, hi = pair
    if not (0 <= lo < len(energies) and 0 <= hi < len(energies)) or lo == hi:
        raise ValueError(f"invalid level pair {pair} for a {len(energies)}-level system")

    step = max(MIN_STEP, RELATIVE_STEP * abs(B.magnitude))

    def gap(magnitude: float) -> float:
        return _gap_following(sys, B, magnitude, pair, energies, vectors)

    full = (gap(B.magnitude + step) - gap(B.magnitude - step)) / (2.0 * step)
    half = (gap(B.magnitude + 0.5 * step) - gap(B.magnitude - 0.5 * step)) / step
    estimate = (4.0 * half - full) / 3.0
    disagreement = abs(full - half) / max(abs(estimate), MU_N_OVER_H)
    if disagreement > RICHARDSON_TOLERANCE:
        logger.warning(
            f"Finite-difference estimates disagree | pair={pair} | "
            f"field={B.magnitude:.6g}T | relative={disagreement:.2e}"
        )

    others = [k for k in range(len(energies)) if k not in pair]
    gaps = [abs(energies[hi] - energies[lo])]
    gaps += [abs(energies[k] - energies[m]) for k in others for m in pair]
    neighbour_gap = float(min(gaps))
    threshold = DEGENERACY_FACTOR * step * max(abs(estimate), MU_N_OVER_H)
    near_degenerate = neighbour_gap < threshold
    if near_degenerate:
        logger.warning(
            f"Near-degenerate levels inside the difference stencil | pair={pair} | "
            f"field={B.magnitude:.6g}T | gap={neighbour_gap:.3e}Hz"
        )

    return FieldSensitivity(
        dE_dB=float(estimate),
        g_eff=abs(estimate) / MU_B_OVER_H,
        step=step,
        richardson_gap=abs(full - half),
        near_degenerate=near_degenerate,
        neighbour_gap=neighbour_gap,
    )


def find_transitions(sys: SpinSystem, B: FieldPoint, f_probe: float, window: float,
                     drive_axis=None, temperature: float = WORKING_TEMPERATURE) -> List[Transition]:
    """
    All level pairs whose gap lies within window of f_probe.

    Results are sorted by descending drive strength |<lo|S·axis|hi>|; the
    default drive axis is transverse to the static field.
    """
    if f_probe <= 0:
        raise ValueError(f"f_probe must be positive, got {f_probe}")
    if window < 0:
        raise ValueError(f"window must be non-negative, got {window}")

    energies, vectors = eigensystem(build_hamiltonian(sys, B))
    axis = perpendicular_axis(B.direction) if drive_axis is None else drive_axis
    drive = np.abs(vectors.conj().T @ drive_operator(sys, axis) @ vectors)
    populations = thermal_populations(energies, temperature)

    transitions = []
    n = len(energies)
    for lo in range(n):
        for hi in range(lo + 1, n):
            frequency = energies[hi] - energies[lo]
            if abs(frequency - f_probe) > window:
                continue
            sensitivity = field_sensitivity(sys, B, (lo, hi))
            transitions.append(Transition(
                level_lo=lo,
                level_hi=hi,
                frequency=float(frequency),
                dE_dB=sensitivity.dE_dB,
                g_eff=sensitivity.g_eff,
                drive_strength=float(drive[lo, hi]),
                thermal_weight=float(populations[lo] - populations[hi]),
                near_degenerate=sensitivity.near_degenerate,
            ))

    transitions.sort(key=lambda t: (-t.drive_strength, t.level_lo, t.level_hi))
    logger.info(
        f"Transitions found | site={sys.name} | field={B.magnitude:.6g}T | "
        f"f_probe={f_probe:.6g}Hz | count={len(transitions)}"
    )
    return transitions


def resonance_field_estimate(g: float, f_probe: float) -> float:
    """Zeeman-only resonance field hf/(gμB) in tesla."""
    return f_probe / (abs(g) * MU_B_OVER_H)

