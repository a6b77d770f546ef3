import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from erspin.errors import TraceFormatError

logger = logging.getLogger(__name__)

# column schemas of the point tables accepted by each fit kind: (abscissa, ordinate)
TRACE_SCHEMAS: Dict[str, Tuple[str, str]] = {
    "hahn": ("t_seconds", "amplitude"),
    "saturation": ("t_seconds", "amplitude"),
    "t1-temperature": ("temperature_K", "t1_seconds"),
    "t2-temperature": ("temperature_K", "t2_seconds"),
    "spectral-diffusion": ("t_w_seconds", "linewidth_Hz"),
}


@dataclass
class DecayTrace:
    """Measured or simulated points: an abscissa (s, K or s of waiting time) and an amplitude."""
    abscissa: np.ndarray
    amplitude: np.ndarray
    sigma: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
        if self.abscissa.shape != self.amplitude.shape or self.abscissa.ndim != 1:
            raise TraceFormatError(f"trace {self.label!r}: abscissa and amplitude must be 1-D of equal length")
        if self.sigma is not None and self.sigma.shape != self.abscissa.shape:
            raise TraceFormatError(f"trace {self.label!r}: sigma must match the abscissa length")
        if np.any(np.diff(self.abscissa) <= 0):
            raise TraceFormatError(f"trace {self.label!r}: abscissa must be strictly increasing")
        if not (np.all(np.isfinite(self.abscissa)) and np.all(np.isfinite(self.amplitude))):
            raise TraceFormatError(f"trace {self.label!r}: values must be finite")

    def __len__(self) -> int:
        return len(self.abscissa)


@dataclass
class NoisePSD:
    """One-sided PSD of the angular-frequency noise, S(ω) in rad²/s, sampled at frequencies in Hz."""
    frequencies: np.ndarray
    values: np.ndarray
    sources: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.frequencies.shape != self.values.shape:
            raise ValueError("PSD frequencies and values must have equal length")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("PSD frequencies must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("PSD values must be non-negative")
        if not self.sources:
            self.sources = [""] * len(self.frequencies)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "frequency_Hz": self.frequencies,
            "S_rad2_per_s": self.values,
            "source": self.sources,
        })


@dataclass
class FitResult:
    kind: str
    names: List[str]
    values: np.ndarray
    sigmas: np.ndarray
    residual_norm: float
    initial_residual_norm: float
    converged: bool
    iterations: int
    covariance: Optional[np.ndarray] = None
    notes: List[str] = field(default_factory=list)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def sigma(self, name: str) -> float:
        return float(self.sigmas[self.names.index(name)])

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": {n: {"value": float(v), "sigma": float(s)}
                           for n, v, s in zip(self.names, self.values, self.sigmas)},
            "residual_norm": float(self.residual_norm),
            "initial_residual_norm": float(self.initial_residual_norm),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def to_text(self) -> str:
        lines = [f"# fit: {self.kind}"]
        lines += [f"{n} = {v:.10g} ± {s:.3g}" for n, v, s in zip(self.names, self.values, self.sigmas)]
        lines.append(f"residual_norm = {self.residual_norm:.6g}")
        lines.append(f"iterations = {self.iterations}")
        lines += [f"# {note}" for note in self.notes]
        return "\n".join(lines) + "\n"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"parameter": self.names, "value": self.values, "sigma": self.sigmas})


def read_table(path: Union[str, Path], required: Sequence[str], optional: Sequence[str] = ()) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise TraceFormatError(f"{path}: file not found")
    try:
        table = pd.read_csv(path, comment="#", skipinitialspace=True)
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise TraceFormatError(f"{path}: not a CSV table ({e})") from e
    table.columns = [str(c).strip() for c in table.columns]
    missing = [c for c in required if c not in table.columns]
    if missing:
        raise TraceFormatError(f"{path}: missing column(s) {', '.join(missing)}; header must name {', '.join(required)}")
    columns = list(required) + [c for c in optional if c in table.columns]
    try:
        table = table[columns].astype(float)
    except ValueError as e:
        raise TraceFormatError(f"{path}: non-numeric value ({e})") from e
    if table.isna().any().any():
        raise TraceFormatError(f"{path}: empty cells are not allowed")
    return table


def read_decay_trace(path: Union[str, Path], kind: str = "hahn") -> DecayTrace:
    """
    Reads a point table with a header naming its columns.

    Echo decays use `t_seconds,amplitude[,sigma]`; the other fit kinds use
    the columns listed in TRACE_SCHEMAS.

    Raises:
        TraceFormatError: If the file is missing, lacks a column or holds non-numeric data.
    """
    x, y = TRACE_SCHEMAS[kind]
    table = read_table(path, (x, y), ("sigma",))
    sigma = table["sigma"].to_numpy() if "sigma" in table.columns else None
    trace = DecayTrace(table[x].to_numpy(), table[y].to_numpy(), sigma, label=Path(path).stem)
    logger.info(f"Trace loaded | path={path} | kind={kind} | points={len(trace)}")
    return trace


def write_decay_trace(trace: DecayTrace, path: Union[str, Path], kind: str = "hahn") -> Path:
    x, y = TRACE_SCHEMAS[kind]
    table = pd.DataFrame({x: trace.abscissa, y: trace.amplitude})
    if trace.sigma is not None:
        table["sigma"] = trace.sigma
    path = Path(path)
    table.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    return path


def one_over_e_time(times: Sequence[float], amplitude: Sequence[float],
                    reference: Optional[float] = None) -> Optional[float]:
    """
    First time the amplitude falls to 1/e of reference (default: the first
    value), log-interpolated; None if it never does.
    """
    times = np.asarray(times, dtype=float)
    amplitude = np.asarray(amplitude, dtype=float)
    reference = amplitude[0] if reference is None else reference
    if reference <= 0:
        return None
    below = np.nonzero(amplitude <= reference / np.e)[0]
    if len(below) == 0:
        return None
    k = below[0]
    level = np.log(reference) - 1.0
    if k == 0:
        a, b = np.log(reference), np.log(max(amplitude[0], 1e-300))
        return float(times[0] * (level - a) / (b - a)) if a != b else float(times[0])
    a, b = np.log(max(amplitude[k - 1], 1e-300)), np.log(max(amplitude[k], 1e-300))
    if a == b:
        return float(times[k])
    return float(times[k - 1] + (level - a) / (b - a) * (times[k] - times[k - 1]))
