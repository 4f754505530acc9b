"""
Rotations about arbitrary axes through the centre of the unit sphere.

All rotations are active (the vector turns, the frame stays) and follow the
right-hand rule. The closed axis-angle form below is the exponential of the
so(3) generators, so no generator matrices are kept at runtime.
"""
import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from utils.exceptions import DegenerateVector

logger = logging.getLogger(__name__)

_MIN_NORM = 1e-12


@dataclass(frozen=True)
class UnitVector3:
    """
    A point on the unit sphere, equivalently a unit vector from its centre

    Construction renormalizes, so (2, 0, 0) becomes x̂. Inputs shorter than
    1e-12 are rejected.
    """
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = float(np.sqrt(self.x * self.x + self.y * self.y + self.z * self.z))
        if not np.isfinite(norm) or norm < _MIN_NORM:
            raise DegenerateVector(f"Cannot normalize ({self.x}, {self.y}, {self.z})")
        object.__setattr__(self, 'x', float(self.x) / norm)
        object.__setattr__(self, 'y', float(self.y) / norm)
        object.__setattr__(self, 'z', float(self.z) / norm)

    @classmethod
    def from_iterable(cls, values: Iterable[float]) -> "UnitVector3":
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def dot(self, other: "UnitVector3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def __neg__(self) -> "UnitVector3":
        return UnitVector3(-self.x, -self.y, -self.z)


X_AXIS = UnitVector3(1.0, 0.0, 0.0)
Y_AXIS = UnitVector3(0.0, 1.0, 0.0)
Z_AXIS = UnitVector3(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class Rotation:
    """A proper orthogonal 3×3 matrix (RᵀR = I, det R = +1)"""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.shape != (3, 3):
            raise ValueError(f"Rotation matrix must be 3x3, got {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3))

    def transpose(self) -> "Rotation":
        """The inverse rotation"""
        return Rotation(self.matrix.T)

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return Rotation(self.matrix @ other.matrix)


def skew(axis: np.ndarray) -> np.ndarray:
    """Cross-product matrix K with K v = axis × v"""
    x, y, z = axis
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def rotation_about_axis(angle: float, axis: UnitVector3) -> Rotation:
    """
    Active right-hand rotation by `angle` about `axis`

    R = I + sin(θ) K + (1 - cos(θ)) K², K being the cross-product matrix of
    the axis.

    Args:
        angle: Rotation angle in radians (any real value)
        axis: Unit rotation axis

    Returns:
        The rotation
    """
    k = skew(axis.to_array())
    matrix = np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)
    return Rotation(matrix)


def apply(rotation: Rotation, v: UnitVector3) -> UnitVector3:
    """Rotate a unit vector: R·v"""
    return UnitVector3.from_iterable(rotation.matrix @ v.to_array())


def rotate_vectors(angle, axis, v) -> np.ndarray:
    """
    Vectorized active rotation of v about axis by angle

    Uses v cos θ + (k × v) sin θ + k (k·v)(1 - cos θ), which equals
    rotation_about_axis(θ, k) @ v. All arguments broadcast: angle has shape
    (...), axis and v have shape (..., 3).

    Args:
        angle: Rotation angles
        axis: Unit axes
        v: Vectors to rotate

    Returns:
        Rotated vectors with the broadcast shape (..., 3)
    """
    angle = np.asarray(angle, dtype=float)[..., np.newaxis]
    axis = np.asarray(axis, dtype=float)
    v = np.asarray(v, dtype=float)
    c = np.cos(angle)
    s = np.sin(angle)
    k_dot_v = np.sum(axis * v, axis=-1, keepdims=True)
    return v * c + np.cross(axis, v) * s + axis * k_dot_v * (1.0 - c)


def normalize_rows(v: np.ndarray) -> np.ndarray:
    """Normalize vectors along the last axis (zero rows come back as NaN)"""
    v = np.asarray(v, dtype=float)
    with np.errstate(invalid='ignore', divide='ignore'):
        return v / np.linalg.norm(v, axis=-1, keepdims=True)
