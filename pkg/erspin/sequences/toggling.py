import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from erspin.errors import (
    InfeasibleBudgetError, SequenceError, SpacingViolationError, UnsupportedPulseError,
)
from erspin.sequences.pulses import (
    DEFAULT_MIN_SEPARATION, HALF_PI, PI, Pulse, PulseSequence, SequenceKind, check_spacing, xy8,
)
from erspin.spin.system import Tensor

logger = logging.getLogger(__name__)

# like-spin secular dipolar coupling ZZ - (XX + YY)/2 as a coupling matrix
SECULAR_DIPOLAR = np.diag([-0.5, -0.5, 1.0])
RATIO_TOLERANCE = 0.05
ZERO_TOLERANCE = 1e-9
CANDIDATE_PHASES = (0.0, HALF_PI, PI, 3.0 * HALF_PI)
FRAME_AXES = (np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))


def pulse_rotation(pulse: Pulse) -> np.ndarray:
    """SO(3) matrix of an ideal rotation about the transverse axis at pulse.phase."""
    axis = np.array([math.cos(pulse.phase), math.sin(pulse.phase), 0.0])
    matrix = Rotation.from_rotvec(pulse.angle * axis).as_matrix()
    rounded = np.round(matrix)
    return np.where(np.abs(matrix - rounded) < 1e-12, rounded, matrix)


def frame_intervals(seq: PulseSequence, strict: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Free-evolution intervals and the cumulative pulse rotation preceding each.

    Returns edges of shape (n+1,) and rotations of shape (n, 3, 3). With
    strict=True only π and π/2 rotations are accepted.
    """
    pulses = seq.evolution_pulses
    if strict:
        for p in pulses:
            if not (p.is_pi or p.is_half_pi):
                raise UnsupportedPulseError(
                    f"toggling frame supports π and π/2 rotations, got {math.degrees(p.angle):.3f} deg "
                    f"at {p.time * 1e6:.3f} us"
                )
    edges = np.array([seq.start] + [p.time for p in pulses] + [seq.total_time])
    rotations = [np.eye(3)]
    for p in pulses:
        rotations.append(pulse_rotation(p) @ rotations[-1])
    return edges, np.array(rotations)


def sign_function(seq: PulseSequence) -> Tuple[np.ndarray, np.ndarray]:
    """Edges and z-component of the toggling-frame image of σz on each interval."""
    edges, rotations = frame_intervals(seq)
    return edges, rotations[:, 2, 2]


def _first_return(running: np.ndarray, increments: np.ndarray, durations: np.ndarray,
                  edges: np.ndarray, scale: float) -> Optional[float]:
    # running[k] is the integral at edges[k]; zero inside interval k if running[k] = -s·increments[k]
    for k in range(len(durations)):
        increment = increments[k]
        norm = float(np.sum(increment * increment))
        if norm == 0.0 or durations[k] == 0.0:
            continue
        s = -float(np.sum(running[k] * increment)) / norm
        if not (0.0 < s <= durations[k] * (1.0 + ZERO_TOLERANCE)):
            continue
        residual = np.sqrt(np.sum((running[k] + s * increment) ** 2))
        if residual <= ZERO_TOLERANCE * scale:
            return float(edges[k] + s - edges[0])
    return None


@dataclass
class TogglingReport:
    edges: np.ndarray
    frames: np.ndarray          # (n, 3) image of σz on each interval
    disorder_score: float
    zz_score: float
    flip_flop_score: float
    interaction_score: float
    disorder_period: Optional[float]
    interaction_period: Optional[float]
    anisotropic_g_disclaimer: bool = False

    @property
    def ratio(self) -> Optional[float]:
        """Disorder-to-interaction decoupling ratio; inf when interaction never averages out."""
        if self.disorder_period is None:
            return None
        if self.interaction_period is None:
            return math.inf
        return self.interaction_period / self.disorder_period


def toggling_frame(seq: PulseSequence, g_tensor: Optional[Tensor] = None) -> TogglingReport:
    """
    Zeroth-order average Hamiltonian scores of a pulse sequence.

    The disorder score is the norm of the time-averaged image of σz; the
    interaction scores are the time-averaged ZZ and flip-flop coefficients of
    the like-spin secular dipolar coupling, both spins rotated together.
    Periods are the first times at which the running averages vanish.

    Raises:
        UnsupportedPulseError: If a pulse is neither a π nor a π/2 rotation.
    """
    edges, rotations = frame_intervals(seq, strict=True)
    durations = np.diff(edges)
    total = float(durations.sum())
    frames = rotations[:, 2, :]

    couplings = np.array([1.5 * np.outer(u, u) - 0.5 * np.eye(3) for u in frames])
    average_frame = (durations[:, None] * frames).sum(axis=0) / total
    average_coupling = (durations[:, None, None] * couplings).sum(axis=0) / total

    running_frame = np.vstack([np.zeros(3), np.cumsum(durations[:, None] * frames, axis=0)])
    running_coupling = np.concatenate(
        [np.zeros((1, 3, 3)), np.cumsum(durations[:, None, None] * couplings, axis=0)]
    )

    disclaimer = False
    if g_tensor is not None and np.ptp(np.asarray(g_tensor.principal)) > 0:
        disclaimer = True
        logger.info(
            f"Dipolar scores assume isotropic coupling | sequence={seq.label} | "
            f"g_principal={tuple(g_tensor.principal)}"
        )

    return TogglingReport(
        edges=edges,
        frames=frames,
        disorder_score=float(np.linalg.norm(average_frame)),
        zz_score=float(average_coupling[2, 2]),
        flip_flop_score=float(-(average_coupling[0, 0] + average_coupling[1, 1])),
        interaction_score=float(np.linalg.norm(average_coupling) / np.linalg.norm(SECULAR_DIPOLAR)),
        disorder_period=_first_return(running_frame, frames, durations, edges, total),
        interaction_period=_first_return(running_coupling, couplings, durations, edges, total),
        anisotropic_g_disclaimer=disclaimer,
    )


# ---------------- RATIO SEQUENCES ----------------

def _transition_pulse(time: float, rotation: np.ndarray, target: np.ndarray) -> Tuple[Pulse, np.ndarray]:
    current = rotation[2, :]
    if abs(abs(float(np.dot(current, target))) - 1.0) < 1e-9:
        # any transverse π pulse inverts the image of σz
        candidates = [(PI, 0.0)]
    else:
        candidates = [(HALF_PI, phase) for phase in CANDIDATE_PHASES]
    for angle, phase in candidates:
        pulse = Pulse(time, angle, phase)
        updated = pulse_rotation(pulse) @ rotation
        if abs(abs(float(np.dot(updated[2, :], target))) - 1.0) < 1e-9:
            return pulse, updated
    raise SequenceError(f"no single pulse maps the frame onto {target}")


def _frame_plan(k: int) -> List[np.ndarray]:
    plan = []
    for axis in FRAME_AXES:
        plan.extend([axis] * (2 * k))
    return plan


def generate_ratio_sequence(target_ratio: float, base_spacing: float, pulse_budget: int,
                            min_separation: float = DEFAULT_MIN_SEPARATION) -> PulseSequence:
    """
    Synthesizes a sequence with the requested disorder-to-interaction ratio.

    inf:1 gives an XY8 train. A finite ratio 3k:1 cycles the σz frame through
    z, x and y, spending k sign-alternating pairs of intervals on each axis,
    so disorder averages out every two intervals and the interaction after
    6k. The result is verified with toggling_frame before it is returned.

    Raises:
        InfeasibleBudgetError: If the ratio is not realisable or the budget is too small.
        SpacingViolationError: If base_spacing is below min_separation.
    """
    if base_spacing < min_separation * (1.0 - 1e-9):
        raise SpacingViolationError(
            f"base spacing {base_spacing * 1e6:.3f} us is below the minimum separation "
            f"{min_separation * 1e6:.3f} us"
        )

    if math.isinf(target_ratio):
        blocks = pulse_budget // 8
        if blocks < 1:
            raise InfeasibleBudgetError(f"an XY8 block needs 8 pulses, budget is {pulse_budget}")
        seq = xy8(blocks, base_spacing)
    else:
        k = target_ratio / 3.0
        if target_ratio <= 0 or abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise InfeasibleBudgetError(
                f"ratio {target_ratio:g}:1 is not realisable by frame cycling; "
                f"supported ratios are multiples of 3 (3, 6, 9, 12, ...) and inf"
            )
        k = int(round(k))
        per_cycle = 6 * k
        cycles = (pulse_budget + 1) // per_cycle
        if cycles < 1:
            raise InfeasibleBudgetError(
                f"ratio {target_ratio:g}:1 needs at least {per_cycle - 1} pulses, budget is {pulse_budget}"
            )
        plan = _frame_plan(k) * cycles
        pulses = [Pulse(0.0, HALF_PI, 0.0)]
        rotation = np.eye(3)
        for j, target in enumerate(plan[1:], start=1):
            pulse, rotation = _transition_pulse(j * base_spacing, rotation, target)
            pulses.append(pulse)
        seq = PulseSequence(tuple(pulses), len(plan) * base_spacing, f"ratio-{target_ratio:g}:1",
                            float(target_ratio), SequenceKind.CUSTOM, base_spacing)

    check_spacing(seq, min_separation)
    report = toggling_frame(seq)
    achieved = report.ratio
    if math.isinf(target_ratio):
        verified = achieved is not None and math.isinf(achieved) and report.disorder_score < 1e-9
    else:
        verified = achieved is not None and abs(achieved - target_ratio) <= RATIO_TOLERANCE * target_ratio
    if not verified:
        raise SequenceError(f"generated sequence reports ratio {achieved}, expected {target_ratio}")

    logger.info(
        f"Ratio sequence generated | target={target_ratio:g} | achieved={achieved:g} | "
        f"pulses={len(seq.pulses)} | total_time={seq.total_time:.6g}s"
    )
    return seq
