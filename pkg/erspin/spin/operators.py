import numpy as np
from typing import Tuple
from scipy.spatial.transform import Rotation

from erspin.errors import InvalidSpinError


def spin_operators(s: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns the x, y, z angular momentum matrices for spin s.

    Basis states are ordered m = s, s-1, ..., -s.

    Raises:
        InvalidSpinError: If 2s is not a non-negative integer.
    """
    two_s = 2.0 * s
    if s < 0 or abs(two_s - round(two_s)) > 1e-12:
        raise InvalidSpinError(f"spin must be a non-negative half-integer, got {s}")

    dim = int(round(two_s)) + 1
    m = s - np.arange(dim)

    # <m+1|S+|m> sits one row above the diagonal in this ordering
    s_plus = np.zeros((dim, dim), dtype=complex)
    for row in range(dim - 1):
        s_plus[row, row + 1] = np.sqrt(s * (s + 1) - m[row + 1] * (m[row + 1] + 1))
    s_minus = s_plus.conj().T

    sx = 0.5 * (s_plus + s_minus)
    sy = -0.5j * (s_plus - s_minus)
    sz = np.diag(m).astype(complex)
    return sx, sy, sz


def spin_vector(s: float) -> np.ndarray:
    """Stacked operators with shape (3, 2s+1, 2s+1)."""
    return np.array(spin_operators(s))


def euler_rotation(euler: Tuple[float, float, float]) -> np.ndarray:
    """Rotation matrix for intrinsic ZYZ Euler angles (radians)."""
    return Rotation.from_euler("ZYZ", np.asarray(euler, dtype=float)).as_matrix()


def tensor_matrix(principal: Tuple[float, float, float],
                  euler: Tuple[float, float, float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    """Cartesian tensor R·diag(principal)·Rᵀ in the crystal frame."""
    rotation = euler_rotation(euler)
    return rotation @ np.diag(np.asarray(principal, dtype=float)) @ rotation.T


def perpendicular_axis(direction: np.ndarray) -> np.ndarray:
    """Unit vector transverse to direction, used as the default drive axis."""
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    # pick the lab axis least aligned with the field
    trial = np.eye(3)[int(np.argmin(np.abs(direction)))]
    axis = trial - direction * np.dot(trial, direction)
    return axis / np.linalg.norm(axis)
