import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import pandas as pd

from erspin.errors import SequenceError, SequenceTableError, SpacingViolationError

logger = logging.getLogger(__name__)

PI = math.pi
HALF_PI = 0.5 * math.pi
DEFAULT_MIN_SEPARATION = 10e-6  # s
ANGLE_TOLERANCE = 1e-9
XY8_PHASES = (0.0, HALF_PI, 0.0, HALF_PI, HALF_PI, 0.0, HALF_PI, 0.0)


class SequenceKind(str, Enum):
    HAHN = "hahn"
    CPMG = "cpmg"
    XY8 = "xy8"
    STIMULATED = "stimulated"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Pulse:
    """Ideal rotation: time in s, angle and transverse phase in rad."""
    time: float
    angle: float = PI
    phase: float = 0.0

    def __post_init__(self):
        if self.time < 0:
            raise SequenceError(f"pulse time must be non-negative, got {self.time}")
        if not 0.0 < self.angle < 2.0 * PI:
            raise SequenceError(f"pulse angle must lie in (0, 2π), got {self.angle}")

    @property
    def is_pi(self) -> bool:
        return abs(self.angle - PI) < ANGLE_TOLERANCE

    @property
    def is_half_pi(self) -> bool:
        return abs(self.angle - HALF_PI) < ANGLE_TOLERANCE


@dataclass(frozen=True)
class PulseSequence:
    pulses: Tuple[Pulse, ...]
    total_time: float
    label: str
    target_ratio: Optional[float] = None
    kind: SequenceKind = SequenceKind.CUSTOM
    spacing: Optional[float] = None

    def __post_init__(self):
        times = [p.time for p in self.pulses]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise SequenceError(f"pulse times must be strictly increasing in {self.label}")
        if times and self.total_time < times[-1]:
            raise SequenceError(f"total time precedes the last pulse in {self.label}")
        if self.total_time <= 0:
            raise SequenceError(f"total time must be positive in {self.label}")

    @property
    def has_preparation(self) -> bool:
        return bool(self.pulses) and self.pulses[0].is_half_pi

    @property
    def start(self) -> float:
        """Time at which free evolution begins (after the preparation pulse)."""
        return self.pulses[0].time if self.has_preparation else 0.0

    @property
    def duration(self) -> float:
        return self.total_time - self.start

    @property
    def evolution_pulses(self) -> Tuple[Pulse, ...]:
        """Pulses acting during free evolution: no preparation, no readout at the end."""
        pulses = self.pulses[1:] if self.has_preparation else self.pulses
        return tuple(p for p in pulses if p.time < self.total_time)

    @property
    def refocusing_pulses(self) -> Tuple[Pulse, ...]:
        return tuple(p for p in self.pulses if p.is_pi)

    def rescaled(self, total_time: float) -> "PulseSequence":
        """Copy with every interval stretched so free evolution lasts total_time."""
        factor = total_time / self.duration
        start = self.start
        pulses = tuple(replace(p, time=start + (p.time - start) * factor) for p in self.pulses)
        spacing = None if self.spacing is None else self.spacing * factor
        return replace(self, pulses=pulses, total_time=start + total_time, spacing=spacing)

    def shifted(self, offset: float) -> "PulseSequence":
        pulses = tuple(replace(p, time=p.time + offset) for p in self.pulses)
        return replace(self, pulses=pulses, total_time=self.total_time + offset)


def rescale(seq: PulseSequence, total_time: float) -> PulseSequence:
    return seq.rescaled(total_time)


def check_spacing(seq: PulseSequence, min_separation: float) -> None:
    """
    Raises:
        SpacingViolationError: If two consecutive evolution pulses are closer than min_separation.
    """
    times = [p.time for p in seq.evolution_pulses]
    for a, b in zip(times, times[1:]):
        if b - a < min_separation * (1.0 - 1e-9):
            raise SpacingViolationError(
                f"pulses at {a * 1e6:.3f} us and {b * 1e6:.3f} us are closer than "
                f"the minimum separation of {min_separation * 1e6:.3f} us"
            )


def _positive(name: str, value: float) -> float:
    if not value > 0:
        raise SequenceError(f"{name} must be positive, got {value}")
    return float(value)


def _train(label: str, kind: SequenceKind, n: int, t_sep: float, phases: Sequence[float],
           target_ratio: Optional[float]) -> PulseSequence:
    pulses = [Pulse(0.0, HALF_PI, 0.0)]
    pulses += [Pulse(t_sep / 2.0 + k * t_sep, PI, phases[k % len(phases)]) for k in range(n)]
    return PulseSequence(tuple(pulses), n * t_sep, label, target_ratio, kind, t_sep)


def hahn(tau: float) -> PulseSequence:
    tau = _positive("tau", tau)
    pulses = (Pulse(0.0, HALF_PI, 0.0), Pulse(tau, PI, 0.0))
    return PulseSequence(pulses, 2.0 * tau, "hahn", None, SequenceKind.HAHN, 2.0 * tau)


def cpmg(n: int, t_sep: float) -> PulseSequence:
    if n < 1:
        raise SequenceError(f"CPMG needs at least one pulse, got {n}")
    return _train(f"cpmg-{n}", SequenceKind.CPMG, n, _positive("t_sep", t_sep), (HALF_PI,), None)


def xy8(blocks: int, t_sep: float) -> PulseSequence:
    if blocks < 1:
        raise SequenceError(f"XY8 needs at least one block, got {blocks}")
    return _train(f"xy8-{blocks}", SequenceKind.XY8, 8 * blocks, _positive("t_sep", t_sep),
                  XY8_PHASES, math.inf)


def stimulated(tau: float, t_w: float) -> PulseSequence:
    tau = _positive("tau", tau)
    t_w = _positive("t_w", t_w)
    pulses = (Pulse(0.0, HALF_PI, 0.0), Pulse(tau, HALF_PI, 0.0), Pulse(tau + t_w, HALF_PI, 0.0))
    return PulseSequence(pulses, 2.0 * tau + t_w, "stimulated", None, SequenceKind.STIMULATED)


def custom(pulses: Iterable[Union[Pulse, Tuple[float, float, float]]], ratio: Optional[float] = None,
           total_time: Optional[float] = None, label: str = "custom") -> PulseSequence:
    pulses = tuple(p if isinstance(p, Pulse) else Pulse(*p) for p in pulses)
    if not pulses and total_time is None:
        raise SequenceError("a custom sequence needs pulses or a total time")
    total = pulses[-1].time if total_time is None else total_time
    return PulseSequence(pulses, total, label, ratio, SequenceKind.CUSTOM)


def make_sequence(kind, min_separation: float = DEFAULT_MIN_SEPARATION, **params) -> PulseSequence:
    """
    Builds a standard or custom sequence and checks the minimum pulse separation.

    Kinds and parameters: hahn(tau), cpmg(n, t_sep), xy8(blocks, t_sep),
    stimulated(tau, t_w), custom(pulses, ratio, total_time).
    """
    builders = {
        SequenceKind.HAHN: hahn,
        SequenceKind.CPMG: cpmg,
        SequenceKind.XY8: xy8,
        SequenceKind.STIMULATED: stimulated,
        SequenceKind.CUSTOM: custom,
    }
    seq = builders[SequenceKind(kind)](**params)
    check_spacing(seq, min_separation)
    logger.info(
        f"Sequence built | label={seq.label} | pulses={len(seq.pulses)} | "
        f"total_time={seq.total_time:.6g}s"
    )
    return seq


# ---------------- TABLE FORMAT ----------------

def _format_ratio(ratio: Optional[float]) -> str:
    if ratio is None:
        return "none"
    return "inf" if math.isinf(ratio) else f"{ratio:g}"


def write_sequence_table(seq: PulseSequence, path: Union[str, Path]) -> Path:
    """Writes `time_us angle_deg phase_deg` rows preceded by `#` directives."""
    path = Path(path)
    table = pd.DataFrame({
        "time_us": [p.time * 1e6 for p in seq.pulses],
        "angle_deg": [math.degrees(p.angle) for p in seq.pulses],
        "phase_deg": [math.degrees(p.phase) for p in seq.pulses],
    })
    with open(path, "w", newline="") as f:
        f.write(f"# label: {seq.label}\n")
        f.write(f"# total_us: {seq.total_time * 1e6:.6f}\n")
        f.write(f"# ratio: {_format_ratio(seq.target_ratio)}\n")
        f.write("# time_us angle_deg phase_deg\n")
        table.to_csv(f, sep=" ", header=False, index=False, float_format="%.6f", lineterminator="\n")
    return path


def read_sequence_table(path: Union[str, Path]) -> PulseSequence:
    """
    Reads a pulse table written by write_sequence_table or by hand.

    Raises:
        SequenceTableError: If a row is not three numbers or a directive is malformed.
    """
    path = Path(path)
    directives = {}
    with open(path) as f:
        for number, line in enumerate(f, start=1):
            stripped = line.strip()
            if stripped.startswith("#") and ":" in stripped:
                key, _, value = stripped[1:].partition(":")
                directives[key.strip()] = (value.strip(), number)

    try:
        table = pd.read_csv(path, sep=r"\s+", comment="#", header=None,
                            names=["time_us", "angle_deg", "phase_deg"], dtype=float)
    except (ValueError, pd.errors.ParserError) as e:
        raise SequenceTableError(f"{path}: rows must hold three numbers ({e})") from e
    if table.isna().any().any():
        raise SequenceTableError(f"{path}: rows must hold three numbers")

    try:
        total = float(directives["total_us"][0]) * 1e-6 if "total_us" in directives else None
        ratio_text = directives.get("ratio", ("none", 0))[0]
        ratio = None if ratio_text == "none" else float(ratio_text)
    except ValueError as e:
        raise SequenceTableError(f"{path}: malformed directive ({e})") from e
    label = directives.get("label", (path.stem, 0))[0]

    pulses = [Pulse(row.time_us * 1e-6, math.radians(row.angle_deg), math.radians(row.phase_deg))
              for row in table.itertuples(index=False)]
    return custom(pulses, ratio=ratio, total_time=total, label=label)
