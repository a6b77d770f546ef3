from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from erspin.errors import InvalidSpinError
from erspin.spin.operators import tensor_matrix

Vector3 = Tuple[float, float, float]


@dataclass(frozen=True)
class Tensor:
    """Principal values plus ZYZ Euler angles relative to the crystal frame."""
    principal: Vector3 = (0.0, 0.0, 0.0)
    euler: Vector3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not np.all(np.isfinite(self.principal)) or not np.all(np.isfinite(self.euler)):
            raise InvalidSpinError("tensor principal values and Euler angles must be finite")

    @property
    def matrix(self) -> np.ndarray:
        return tensor_matrix(self.principal, self.euler)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.principal)

    @classmethod
    def isotropic(cls, value: float) -> "Tensor":
        return cls((value, value, value))


@dataclass(frozen=True)
class SpinSystem:
    """Electron and nuclear spin of one site with its g, A and Q tensors (A, Q in Hz)."""
    g: Tensor
    A: Tensor = field(default_factory=Tensor)
    Q: Tensor = field(default_factory=Tensor)
    g_n: float = 0.0
    electron_spin: float = 0.5
    nuclear_spin: float = 3.5
    name: str = "site"

    @property
    def electron_dim(self) -> int:
        return int(round(2 * self.electron_spin)) + 1

    @property
    def nuclear_dim(self) -> int:
        return int(round(2 * self.nuclear_spin)) + 1

    @property
    def dim(self) -> int:
        return self.electron_dim * self.nuclear_dim

    @property
    def g_principal(self) -> np.ndarray:
        return np.asarray(self.g.principal, dtype=float)

    def effective_g(self, direction: np.ndarray) -> float:
        """Zeeman-only effective g |g·n| along a field direction."""
        return float(np.linalg.norm(self.g.matrix @ np.asarray(direction, dtype=float)))

    def without_nucleus(self) -> "SpinSystem":
        """Same site with an I=0 nucleus (even isotopes)."""
        return replace(self, A=Tensor(), Q=Tensor(), g_n=0.0, nuclear_spin=0.0,
                       name=f"{self.name}-I0")


@dataclass(frozen=True)
class FieldPoint:
    """Static field: magnitude in tesla along a unit direction in the crystal frame."""
    magnitude: float
    direction: Vector3 = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not np.isfinite(self.magnitude):
            raise ValueError("field magnitude must be finite")
        norm = float(np.linalg.norm(self.direction))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"field direction must be a unit vector, got norm {norm}")

    @classmethod
    def along(cls, vector, magnitude: float) -> "FieldPoint":
        vector = np.asarray(vector, dtype=float)
        unit = vector / np.linalg.norm(vector)
        return cls(float(magnitude), tuple(float(x) for x in unit))

    @property
    def vector(self) -> np.ndarray:
        return self.magnitude * np.asarray(self.direction, dtype=float)

    def with_magnitude(self, magnitude: float) -> "FieldPoint":
        return FieldPoint(float(magnitude), self.direction)


@dataclass(frozen=True)
class Transition:
    level_lo: int
    level_hi: int
    frequency: float
    dE_dB: float
    g_eff: float
    drive_strength: float
    thermal_weight: float
    near_degenerate: bool = False


@dataclass(frozen=True)
class FieldSensitivity:
    """Gap derivative along the field direction with its finite-difference diagnostics."""
    dE_dB: float
    g_eff: float
    step: float
    richardson_gap: float
    near_degenerate: bool
    neighbour_gap: Optional[float] = None
