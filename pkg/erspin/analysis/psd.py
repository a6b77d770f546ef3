"""
Noise spectroscopy from CPMG coherence times.

A CPMG train with N ≫ 1 pulses at spacing t_sep samples the PSD in a narrow
band around ω0 = π/t_sep, where its filter holds a fraction 8/π² of the
sign-function energy. Then χ(T) ≈ 8·S(ω0)·T/π² and χ(T2) = 1 gives
S(ω0) = π²/(8·T2).
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from erspin.analysis.traces import NoisePSD, read_table
from erspin.constants import HBAR, MU_B
from erspin.errors import TraceFormatError
from erspin.sequences.pulses import PulseSequence, SequenceKind, cpmg

logger = logging.getLogger(__name__)

MIN_PULSES = 8
CPMG_RUN_COLUMNS = ("n_pulses", "t_sep_seconds", "t2_seconds")


@dataclass(frozen=True)
class CPMGRun:
    sequence: PulseSequence
    t2: float
    label: str = ""

    def __post_init__(self):
        if self.sequence.kind is not SequenceKind.CPMG or self.sequence.spacing is None:
            raise ValueError(f"run {self.label!r} is not a CPMG sequence")
        if self.t2 <= 0:
            raise ValueError(f"run {self.label!r}: T2 must be positive, got {self.t2}")

    @classmethod
    def from_counts(cls, n_pulses: int, t_sep: float, t2: float, label: str = "") -> "CPMGRun":
        return cls(cpmg(int(n_pulses), t_sep), t2, label or f"cpmg-{int(n_pulses)}@{t_sep * 1e6:g}us")

    @property
    def n_pulses(self) -> int:
        return len(self.sequence.refocusing_pulses)

    @property
    def frequency(self) -> float:
        """Filter centre 1/(2 t_sep) in Hz."""
        return 0.5 / self.sequence.spacing


def reconstruct_psd(runs: Sequence[CPMGRun]) -> NoisePSD:
    """
    One PSD point per run, S(ω0) = π²/(8·T2), sorted by frequency.

    Runs with the same spacing are averaged. Runs with fewer than 8 pulses
    are kept but logged, since their filters are too broad for the
    narrow-band reading.
    """
    if not runs:
        raise ValueError("at least one CPMG run is required")
    points = {}
    for run in runs:
        if run.n_pulses < MIN_PULSES:
            logger.warning(
                f"CPMG run outside the many-pulse regime | run={run.label} | "
                f"n_pulses={run.n_pulses} | minimum={MIN_PULSES}"
            )
        value = np.pi ** 2 / (8.0 * run.t2)
        points.setdefault(round(run.frequency, 9), []).append((value, run.label))

    frequencies = sorted(points)
    values = [float(np.mean([v for v, _ in points[f]])) for f in frequencies]
    sources = [";".join(label for _, label in points[f]) for f in frequencies]
    logger.info(
        f"PSD reconstructed | runs={len(runs)} | points={len(frequencies)} | "
        f"range=({frequencies[0]:.6g}, {frequencies[-1]:.6g})Hz"
    )
    return NoisePSD(np.array(frequencies), np.array(values), sources)


def to_field_psd(psd: NoisePSD, g_eff: float) -> NoisePSD:
    """Converts an angular-frequency PSD to magnetic-field noise (T²/Hz) using δω = g μB δB/ħ."""
    if g_eff == 0:
        raise ValueError("effective g must be non-zero")
    scale = (HBAR / (abs(g_eff) * MU_B)) ** 2
    return NoisePSD(psd.frequencies.copy(), psd.values * scale, list(psd.sources))


def read_cpmg_runs(path: Union[str, Path]) -> List[CPMGRun]:
    """
    Reads `n_pulses,t_sep_seconds,t2_seconds` rows.

    Raises:
        TraceFormatError: If a column is missing or a row is not physical.
    """
    table = read_table(path, CPMG_RUN_COLUMNS)
    runs = []
    for number, row in enumerate(table.itertuples(index=False), start=1):
        if row.n_pulses < 1 or row.n_pulses != int(row.n_pulses) or row.t_sep_seconds <= 0 or row.t2_seconds <= 0:
            raise TraceFormatError(f"{path}: row {number} is not a valid CPMG run")
        runs.append(CPMGRun.from_counts(int(row.n_pulses), row.t_sep_seconds, row.t2_seconds))
    logger.info(f"CPMG runs loaded | path={path} | runs={len(runs)}")
    return runs


def read_psd(path: Union[str, Path]) -> NoisePSD:
    """Reads a `frequency_Hz,S_rad2_per_s[,source]` table as written by the psd command."""
    table = read_table(path, ("frequency_Hz", "S_rad2_per_s"))
    table = table.sort_values("frequency_Hz")
    try:
        return NoisePSD(table["frequency_Hz"].to_numpy(), table["S_rad2_per_s"].to_numpy())
    except ValueError as e:
        raise TraceFormatError(f"{path}: {e}") from e
