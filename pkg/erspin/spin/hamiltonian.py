import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from erspin.constants import MU_B_OVER_H, MU_N_OVER_H
from erspin.errors import NonHermitianError
from erspin.spin.operators import spin_vector
from erspin.spin.system import FieldPoint, SpinSystem

logger = logging.getLogger(__name__)

HERMITIAN_TOLERANCE = 1e-10
TRACKING_OVERLAP_THRESHOLD = 0.5
DEGENERACY_TOLERANCE = 1.0  # Hz


def _operators(sys: SpinSystem):
    s_ops = spin_vector(sys.electron_spin)
    i_ops = spin_vector(sys.nuclear_spin)
    return s_ops, i_ops, np.eye(sys.electron_dim), np.eye(sys.nuclear_dim)


def static_hamiltonian(sys: SpinSystem) -> np.ndarray:
    """Field-independent part S·A·I + I·Q·I in Hz."""
    s_ops, i_ops, eye_e, _ = _operators(sys)
    a_matrix = sys.A.matrix
    q_matrix = sys.Q.matrix

    h = np.zeros((sys.dim, sys.dim), dtype=complex)
    for i in range(3):
        for j in range(3):
            if a_matrix[i, j] != 0.0:
                h += a_matrix[i, j] * np.kron(s_ops[i], i_ops[j])
            if q_matrix[i, j] != 0.0:
                h += q_matrix[i, j] * np.kron(eye_e, i_ops[i] @ i_ops[j])
    return h


def zeeman_per_tesla(sys: SpinSystem, direction) -> np.ndarray:
    """Electron and nuclear Zeeman terms for a 1 T field along direction, in Hz."""
    s_ops, i_ops, eye_e, eye_n = _operators(sys)
    direction = np.asarray(direction, dtype=float)
    electron = MU_B_OVER_H * (direction @ sys.g.matrix)
    nuclear = -MU_N_OVER_H * sys.g_n * direction

    h = np.zeros((sys.dim, sys.dim), dtype=complex)
    for k in range(3):
        h += electron[k] * np.kron(s_ops[k], eye_n)
        h += nuclear[k] * np.kron(eye_e, i_ops[k])
    return h


def build_hamiltonian(sys: SpinSystem, B: FieldPoint) -> np.ndarray:
    """
    Spin Hamiltonian in Hz for one field point.

    H = (μB/h) B·g·S⊗1 + S·A·I + I·Q·I − (μN/h) g_n B·I, electron operators
    on the left of each Kronecker product.
    """
    h = static_hamiltonian(sys) + B.magnitude * zeeman_per_tesla(sys, B.direction)
    return 0.5 * (h + h.conj().T)


def eigensystem(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ascending eigenvalues and orthonormal eigenvectors (columns) of a Hermitian matrix.

    Raises:
        NonHermitianError: If h is not square or deviates from its adjoint.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NonHermitianError(f"expected a square matrix, got shape {h.shape}")
    scale = max(np.linalg.norm(h), 1.0)
    residual = np.linalg.norm(h - h.conj().T)
    if residual > HERMITIAN_TOLERANCE * scale:
        raise NonHermitianError(f"matrix is not Hermitian | residual={residual:.3e}")
    return linalg.eigh(h)


def _cluster_overlaps(energies: np.ndarray, overlaps: np.ndarray) -> np.ndarray:
    # Rows of a degenerate cluster share the projection onto the whole cluster.
    merged = overlaps.copy()
    order = np.argsort(energies, kind="stable")
    ordered = energies[order]
    start = 0
    n = len(energies)
    while start < n:
        stop = start + 1
        while stop < n and ordered[stop] - ordered[stop - 1] <= DEGENERACY_TOLERANCE:
            stop += 1
        if stop - start > 1:
            members = order[start:stop]
            merged[members] = overlaps[members].sum(axis=0)
        start = stop
    return merged


def track_levels(ref_energies: np.ndarray, ref_vectors: np.ndarray,
                 new_vectors: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Matches new eigenvectors to reference ones by maximal overlap.

    Returns the permutation such that new_vectors[:, perm[k]] continues
    reference level k, and the smallest matched overlap.
    """
    overlaps = np.abs(ref_vectors.conj().T @ new_vectors) ** 2
    overlaps = _cluster_overlaps(ref_energies, overlaps)
    rows, cols = linear_sum_assignment(-overlaps)
    perm = cols[np.argsort(rows)]
    quality = float(np.min(overlaps[np.arange(len(perm)), perm]))
    return perm, quality


@dataclass
class TrackedSweep:
    """Eigen-decomposition along a field sweep with levels followed by continuity."""
    fields: np.ndarray
    energies: np.ndarray      # (n_fields, dim)
    vectors: np.ndarray       # (n_fields, dim, dim), columns are states
    min_overlap: np.ndarray   # (n_fields,), 1 at the first point

    @property
    def tracking_failed(self) -> bool:
        return bool(np.any(self.min_overlap < TRACKING_OVERLAP_THRESHOLD))


def track_sweep(static: np.ndarray, zeeman: np.ndarray, fields: np.ndarray,
                label: Optional[str] = None) -> TrackedSweep:
    """Diagonalizes static + B·zeeman on every field and follows each level across the grid."""
    fields = np.asarray(fields, dtype=float)
    stack = static[None, :, :] + fields[:, None, None] * zeeman[None, :, :]
    stack = 0.5 * (stack + np.conj(np.swapaxes(stack, 1, 2)))
    energies, vectors = np.linalg.eigh(stack)

    min_overlap = np.ones(len(fields))
    for k in range(1, len(fields)):
        perm, quality = track_levels(energies[k - 1], vectors[k - 1], vectors[k])
        energies[k] = energies[k, perm]
        vectors[k] = vectors[k][:, perm]
        min_overlap[k] = quality

    sweep = TrackedSweep(fields, energies, vectors, min_overlap)
    if sweep.tracking_failed:
        worst = int(np.argmin(min_overlap))
        logger.warning(
            f"Level tracking continuation is ambiguous | "
            f"sweep={label or 'unnamed'} | "
            f"field={fields[worst]:.6g}T | "
            f"overlap={min_overlap[worst]:.3f}"
        )
    return sweep


def level_diagram(sys: SpinSystem, direction, fields: np.ndarray) -> TrackedSweep:
    """Energies of every level along a field sweep, labelled by eigenvector continuation."""
    unit = np.asarray(direction, dtype=float)
    unit = unit / np.linalg.norm(unit)
    return track_sweep(static_hamiltonian(sys), zeeman_per_tesla(sys, unit), fields,
                       label=f"{sys.name} levels")
