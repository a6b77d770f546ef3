import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import brentq

from erspin.constants import K_B_OVER_H, MU_B_OVER_H
from erspin.errors import GroupNotFoundError
from erspin.powder.orientations import OrientationSet
from erspin.spin.hamiltonian import (
    build_hamiltonian, eigensystem, static_hamiltonian, track_levels, track_sweep, zeeman_per_tesla,
)
from erspin.spin.operators import perpendicular_axis
from erspin.spin.system import FieldPoint, SpinSystem
from erspin.spin.transitions import drive_operator

logger = logging.getLogger(__name__)

CONTRIBUTION_FLOOR = 1e-3
GROUP_TOLERANCE = 1e-3


@dataclass(frozen=True)
class SiteSpec:
    system: SpinSystem
    fraction: float


@dataclass
class BranchAnnotation:
    site: str
    g_group: float
    b_min: float
    b_max: float

    @property
    def label(self) -> str:
        return f"{self.site} g={self.g_group:.3g}"


@dataclass
class FieldSpectrum:
    fields: np.ndarray
    amplitude: np.ndarray
    annotations: List[BranchAnnotation] = field(default_factory=list)

    def __post_init__(self):
        if np.any(np.diff(self.fields) <= 0):
            raise ValueError("field grid must be strictly increasing")


@dataclass(frozen=True)
class Resonance:
    field: float
    level_lo: int
    level_hi: int
    drive_strength: float
    g_group: float


def isotope_sites(site: SiteSpec, abundance: float) -> List[SiteSpec]:
    """Splits a site into its magnetic isotope and the I=0 even isotopes."""
    if not 0.0 <= abundance <= 1.0:
        raise ValueError(f"isotope abundance must lie in [0, 1], got {abundance}")
    sites = []
    if abundance > 0.0:
        sites.append(SiteSpec(site.system, site.fraction * abundance))
    if abundance < 1.0 and site.system.nuclear_spin > 0:
        sites.append(SiteSpec(site.system.without_nucleus(), site.fraction * (1.0 - abundance)))
    return sites


def g_group_of(sys: SpinSystem, direction) -> float:
    """Principal g value nearest to the Zeeman-only effective g along direction."""
    principal = sys.g_principal
    g_direction = sys.effective_g(direction)
    return float(principal[int(np.argmin(np.abs(principal - g_direction)))])


def _pair_indices(dim: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(dim, k=1)


def _orientation_spectrum(static: np.ndarray, sys: SpinSystem, direction: np.ndarray,
                          f_probe: float, fields: np.ndarray, temperature: float,
                          bandwidth: float) -> Tuple[np.ndarray, Optional[Tuple[float, float]], bool]:
    sweep = track_sweep(static, zeeman_per_tesla(sys, direction), fields)
    drive = drive_operator(sys, perpendicular_axis(direction))
    adjoint = np.conj(np.swapaxes(sweep.vectors, 1, 2))
    elements = np.abs(adjoint @ drive @ sweep.vectors) ** 2

    lo, hi = _pair_indices(sys.dim)
    gaps = np.abs(sweep.energies[:, hi] - sweep.energies[:, lo])

    boltzmann = np.exp(-(sweep.energies - sweep.energies.min(axis=1, keepdims=True))
                       / (K_B_OVER_H * temperature))
    populations = boltzmann / boltzmann.sum(axis=1, keepdims=True)
    population_gap = np.abs(populations[:, lo] - populations[:, hi])

    # a crossing between grid points is caught by the nearest point
    steps = np.abs(np.diff(gaps, axis=0))
    local = np.zeros_like(gaps)
    if len(fields) > 1:
        local[:-1] = steps
        local[1:] = np.maximum(local[1:], steps)
    acceptance = np.maximum(bandwidth, 0.5 * local)
    resonant = np.abs(gaps - f_probe) <= acceptance

    weight = np.where(resonant, elements[:, lo, hi] * population_gap, 0.0)
    amplitude = weight.sum(axis=1)

    extent = None
    if amplitude.max() > 0:
        visible = amplitude >= CONTRIBUTION_FLOOR * amplitude.max()
        extent = (float(fields[visible].min()), float(fields[visible].max()))
    return amplitude, extent, sweep.tracking_failed


def edfs(sys_or_sites, f_probe: float, fields: np.ndarray, orientations: OrientationSet,
         temperature: float, bandwidth: float, n_jobs: int = 1) -> FieldSpectrum:
    """
    Echo-detected field sweep of a powder.

    Each orientation adds weight · |<lo|S⊥|hi>|² · population difference for
    every transition within the excitation bandwidth of f_probe. Sites are
    summed with their fractions and the result is normalized to unit maximum.
    """
    fields = np.asarray(fields, dtype=float)
    if len(fields) < 2 or fields[-1] <= fields[0]:
        raise ValueError("field grid must span a positive range")
    if bandwidth <= 0:
        raise ValueError(f"excitation bandwidth must be positive, got {bandwidth}")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")

    sites: Sequence[SiteSpec] = (
        [SiteSpec(sys_or_sites, 1.0)] if isinstance(sys_or_sites, SpinSystem) else list(sys_or_sites)
    )
    start_time = time.time()
    total = np.zeros_like(fields)
    extents: Dict[Tuple[str, float], List[float]] = {}
    failed = 0

    for site in sites:
        sys = site.system
        static = static_hamiltonian(sys)
        results = Parallel(n_jobs=n_jobs)(
            delayed(_orientation_spectrum)(static, sys, direction, f_probe, fields, temperature, bandwidth)
            for direction in orientations.vectors
        )
        for direction, weight, (amplitude, extent, tracking_failed) in zip(
                orientations.vectors, orientations.weights, results):
            total += site.fraction * weight * amplitude
            failed += int(tracking_failed)
            if extent is None:
                continue
            key = (sys.name, g_group_of(sys, direction))
            bounds = extents.setdefault(key, [extent[0], extent[1]])
            bounds[0] = min(bounds[0], extent[0])
            bounds[1] = max(bounds[1], extent[1])

    if failed:
        logger.warning(
            f"Level tracking continuation failed for some orientations | "
            f"orientations={failed}/{len(orientations) * len(sites)}"
        )

    peak = total.max()
    amplitude = total / peak if peak > 0 else total
    annotations = [BranchAnnotation(site, g, lo, hi) for (site, g), (lo, hi) in sorted(extents.items())]
    logger.info(
        f"EDFS sweep completed | sites={len(sites)} | "
        f"orientations={len(orientations)} | fields={len(fields)} | "
        f"duration={round(time.time() - start_time, 2)}s"
    )
    return FieldSpectrum(fields, amplitude, annotations)


def resonance_fields(sys: SpinSystem, direction, f_probe: float, fields: np.ndarray,
                     drive_axis=None) -> List[Resonance]:
    """Resonance fields along one direction, bracketed on the grid and refined with Brent's method."""
    unit = np.asarray(direction, dtype=float)
    unit = unit / np.linalg.norm(unit)
    fields = np.asarray(fields, dtype=float)
    sweep = track_sweep(static_hamiltonian(sys), zeeman_per_tesla(sys, unit), fields,
                        label=f"{sys.name} resonances")
    axis = perpendicular_axis(unit) if drive_axis is None else drive_axis
    drive = drive_operator(sys, axis)
    group = g_group_of(sys, unit)

    lo_idx, hi_idx = _pair_indices(sys.dim)
    detuning = np.abs(sweep.energies[:, hi_idx] - sweep.energies[:, lo_idx]) - f_probe

    resonances = []
    for p, (lo, hi) in enumerate(zip(lo_idx, hi_idx)):
        crossings = np.nonzero(np.sign(detuning[:-1, p]) * np.sign(detuning[1:, p]) <= 0)[0]
        for k in crossings:
            ref_energies = sweep.energies[k]
            ref_vectors = sweep.vectors[k]

            def offset(b: float) -> float:
                energies, vectors = eigensystem(build_hamiltonian(sys, FieldPoint.along(unit, b)))
                perm, _ = track_levels(ref_energies, ref_vectors, vectors)
                return abs(energies[perm[hi]] - energies[perm[lo]]) - f_probe

            a, b = fields[k], fields[k + 1]
            if detuning[k, p] == 0.0:
                root = a
            elif detuning[k + 1, p] == 0.0:
                if k + 1 < len(fields) - 1:
                    continue  # picked up by the next interval
                root = b
            else:
                try:
                    root = brentq(offset, a, b, xtol=1e-12, rtol=1e-12)
                except ValueError:
                    continue
            energies, vectors = eigensystem(build_hamiltonian(sys, FieldPoint.along(unit, root)))
            perm, _ = track_levels(ref_energies, ref_vectors, vectors)
            element = abs(vectors[:, perm[lo]].conj() @ drive @ vectors[:, perm[hi]])
            resonances.append(Resonance(float(root), int(lo), int(hi), float(element), group))

    resonances.sort(key=lambda r: (r.field, r.level_lo, r.level_hi))
    return resonances


def default_search_grid(sys: SpinSystem, f_probe: float, points: int = 400) -> np.ndarray:
    principal = np.abs(sys.g_principal)
    low = 0.5 * f_probe / (principal.max() * MU_B_OVER_H)
    high = 1.5 * f_probe / (principal.min() * MU_B_OVER_H)
    return np.linspace(low, high, points)


def branch_extent(sys: SpinSystem, f_probe: float, g_group: float, orientations: OrientationSet,
                  fields: Optional[np.ndarray] = None, min_drive: float = 0.05) -> Tuple[float, float]:
    """
    Lowest and highest resonance field of the allowed transitions in a g group.

    An orientation belongs to the group whose principal g value is nearest
    to its Zeeman-only effective g.

    Raises:
        GroupNotFoundError: If g_group is not a principal value or has no transitions.
    """
    principal = sys.g_principal
    matches = np.abs(principal - g_group) <= GROUP_TOLERANCE * abs(g_group)
    if not np.any(matches):
        raise GroupNotFoundError(f"g={g_group} is not a principal g value of {sys.name}")
    group = float(principal[np.argmax(matches)])
    grid = default_search_grid(sys, f_probe) if fields is None else np.asarray(fields, dtype=float)

    found = []
    for direction in orientations.vectors:
        if g_group_of(sys, direction) != group:
            continue
        found.extend(r.field for r in resonance_fields(sys, direction, f_probe, grid)
                     if r.drive_strength >= min_drive)

    if not found:
        raise GroupNotFoundError(f"no allowed transitions in group g={g_group} for {sys.name}")
    logger.info(
        f"Branch extent | site={sys.name} | g_group={group} | "
        f"b_min={min(found):.6g}T | b_max={max(found):.6g}T | resonances={len(found)}"
    )
    return float(min(found)), float(max(found))
