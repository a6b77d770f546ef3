from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.stats import qmc

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


class OrientationScheme(str, Enum):
    GRID = "grid"
    QUASI_RANDOM = "quasi_random"


@dataclass
class OrientationSet:
    """Field directions in the crystal frame with equal-area weights."""
    vectors: np.ndarray    # (n, 3)
    weights: np.ndarray    # (n,)
    scheme: OrientationScheme

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("orientation vectors must be unit vectors")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("orientation weights must be non-negative and sum to 1")

    def __len__(self) -> int:
        return len(self.weights)

    @classmethod
    def from_vectors(cls, vectors, scheme: OrientationScheme = OrientationScheme.GRID) -> "OrientationSet":
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
        return cls(vectors, np.full(len(vectors), 1.0 / len(vectors)), scheme)

    def rotated(self, rotation: np.ndarray) -> "OrientationSet":
        return OrientationSet(self.vectors @ np.asarray(rotation).T, self.weights.copy(), self.scheme)


def orientation_set(n: int, scheme=OrientationScheme.GRID, seed: Optional[int] = 0) -> OrientationSet:
    """
    Approximately uniform directions on the upper hemisphere.

    The grid scheme is a golden-angle spiral, the quasi-random scheme a
    scrambled Halton sequence; both are equal-area in cos θ.
    """
    if n < 1:
        raise ValueError(f"orientation count must be at least 1, got {n}")
    scheme = OrientationScheme(scheme)

    if scheme is OrientationScheme.GRID:
        k = np.arange(n)
        z = 1.0 - (k + 0.5) / n
        phi = k * GOLDEN_ANGLE
    else:
        sampler = qmc.Halton(d=2, scramble=True, seed=seed)
        u = sampler.random(n)
        z = u[:, 0]
        phi = 2.0 * np.pi * u[:, 1]

    r = np.sqrt(np.clip(1.0 - z ** 2, 0.0, None))
    vectors = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return OrientationSet(vectors, np.full(n, 1.0 / n), scheme)
