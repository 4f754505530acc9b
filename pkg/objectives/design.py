"""
Design vectors, timing and target paths for path-generation synthesis.

Layout of a design vector:
    prescribed: (θ1, β, γ, φ1..φ4, η1..η4)            11 entries
    free:       (θ1..θn, β, γ, φ1..φ4, η1..η4)        n + 10 entries
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config import TARGET_NORM_TOLERANCE
from mechanism.four_bar import SphericalFourBar, build_mechanism
from utils.exceptions import ValidationError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Number of trailing mechanism coordinates: β, γ, φ1..φ4, η1..η4
MECHANISM_SIZE = 10


class SynthesisMode(Enum):
    PRESCRIBED = 'prescribed'
    FREE = 'free'

    @classmethod
    def parse(cls, text: str) -> "SynthesisMode":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValidationError(f"Unknown synthesis mode '{text}' (expected 'prescribed' or 'free')")


class BoundaryRule(Enum):
    """How a coordinate is brought back inside its bounds after mutation"""
    PERIODIC = 'periodic'  # wrap into [lower, upper)
    REFLECT = 'reflect'  # mirror at both ends
    CLIP = 'clip'


@dataclass(frozen=True)
class TargetPath:
    """Ordered desired points r_d1..r_dn, renormalized onto the unit sphere"""
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValidationError(f"Target points must be an (n, 3) array, got shape {points.shape}")
        if len(points) < 3:
            raise ValidationError(f"At least 3 target points are required, got {len(points)}")
        norms = np.linalg.norm(points, axis=1)
        off_sphere = np.flatnonzero(np.abs(norms - 1.0) > TARGET_NORM_TOLERANCE)
        if off_sphere.size:
            raise ValidationError(f"Target points {(off_sphere + 1).tolist()} are not on the unit sphere")
        points = points / norms[:, np.newaxis]
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "TargetPath":
        return cls(np.array([list(p) for p in points], dtype=float))

    def __len__(self) -> int:
        return len(self.points)

    def subsample(self, stride: int) -> "TargetPath":
        """Keep every stride-th point, starting with the first"""
        return TargetPath(self.points[::stride])


def prescribed_thetas(theta1: float, n: int) -> List[float]:
    """θ_k = θ1 + (2π/n)(k - 1) for k = 1..n"""
    return [theta1 + TWO_PI / n * k for k in range(n)]


@dataclass(frozen=True)
class Timing:
    """
    Prescribed input timing: θ_k = θ1 + offsets[k]

    Attributes:
        offsets: Offsets from the first input angle, offsets[0] == 0
        fixed_theta1: Known first angle, or None when θ1 is a design variable
    """
    offsets: Tuple[float, ...]
    fixed_theta1: Optional[float] = None

    @classmethod
    def uniform(cls, n: int, fixed_theta1: Optional[float] = None) -> "Timing":
        return cls(tuple(prescribed_thetas(0.0, n)), fixed_theta1)

    @classmethod
    def spaced(cls, n: int, spacing: float, fixed_theta1: Optional[float] = None) -> "Timing":
        return cls(tuple(spacing * k for k in range(n)), fixed_theta1)

    @classmethod
    def explicit(cls, thetas: Sequence[float], fix_first: bool = False) -> "Timing":
        first = float(thetas[0])
        return cls(tuple(float(t) - first for t in thetas), first if fix_first else None)

    def thetas(self, theta1) -> np.ndarray:
        """Input angles for one θ1 (shape (n,)) or a stack of them (shape (m, n))"""
        return np.asarray(theta1, dtype=float)[..., np.newaxis] + np.asarray(self.offsets)


@dataclass
class DesignVector:
    """Flat design vector X_D with its mode and number of target points"""
    mode: SynthesisMode
    values: np.ndarray
    n_points: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = design_size(self.mode, self.n_points)
        if self.values.shape != (expected,):
            raise ValidationError(
                f"{self.mode.value} design vector for {self.n_points} points needs {expected} entries, "
                f"got {self.values.size}")

    @property
    def theta_slice(self) -> slice:
        return theta_slice(self.mode, self.n_points)

    @property
    def thetas(self) -> np.ndarray:
        """The θ entries stored in the vector (just θ1 in prescribed mode)"""
        return self.values[self.theta_slice]

    @property
    def beta(self) -> float:
        return float(self.values[-10])

    @property
    def gamma(self) -> float:
        return float(self.values[-9])

    @property
    def joint_coords(self) -> Tuple[Tuple[float, float], ...]:
        phis = self.values[-8:-4]
        etas = self.values[-4:]
        return tuple((float(p), float(e)) for p, e in zip(phis, etas))

    def labels(self) -> List[str]:
        return design_labels(self.mode, self.n_points)

    def as_dict(self) -> dict:
        return dict(zip(self.labels(), (float(v) for v in self.values)))


def design_size(mode: SynthesisMode, n_points: int) -> int:
    return (1 if mode is SynthesisMode.PRESCRIBED else n_points) + MECHANISM_SIZE


def theta_slice(mode: SynthesisMode, n_points: int) -> slice:
    return slice(0, 1 if mode is SynthesisMode.PRESCRIBED else n_points)


def design_labels(mode: SynthesisMode, n_points: int) -> List[str]:
    """Coordinate names in X_D order: THETA_1.., BETA, GAMMA, PHI_1..PHI_4, ETA_1..ETA_4"""
    n_thetas = theta_slice(mode, n_points).stop
    labels = [f"THETA_{k}" for k in range(1, n_thetas + 1)]
    labels += ["BETA", "GAMMA"]
    labels += [f"PHI_{k}" for k in range(1, 5)]
    labels += [f"ETA_{k}" for k in range(1, 5)]
    return labels


@dataclass(frozen=True)
class DesignBounds:
    lower: np.ndarray
    upper: np.ndarray
    rules: Tuple[BoundaryRule, ...]
    theta_block: slice = field(default_factory=lambda: slice(0, 0))


def design_bounds(mode: SynthesisMode, n_points: int, timing: Optional[Timing] = None) -> DesignBounds:
    """
    Search domain of every coordinate

    θ_k, β, φ_k ∈ [0, 2π) and γ ∈ [-π, π) wrap periodically; η ∈ [0, π]
    reflects. A known first angle in prescribed mode pins θ1 with equal bounds.

    Args:
        mode: Synthesis mode
        n_points: Number of target points
        timing: Prescribed timing (ignored in free mode)

    Returns:
        DesignBounds; the θ-block is empty in prescribed mode because a
        single θ has nothing to order
    """
    n_thetas = theta_slice(mode, n_points).stop
    lower = [0.0] * n_thetas + [0.0, -math.pi] + [0.0] * 4 + [0.0] * 4
    upper = [TWO_PI] * n_thetas + [TWO_PI, math.pi] + [TWO_PI] * 4 + [math.pi] * 4
    rules = [BoundaryRule.PERIODIC] * (n_thetas + 6) + [BoundaryRule.REFLECT] * 4

    if mode is SynthesisMode.PRESCRIBED and timing is not None and timing.fixed_theta1 is not None:
        lower[0] = upper[0] = float(timing.fixed_theta1)

    block = slice(0, n_thetas) if mode is SynthesisMode.FREE else slice(0, 0)
    return DesignBounds(np.array(lower), np.array(upper), tuple(rules), block)


def decode(design: DesignVector, n: int, timing: Optional[Timing] = None) -> Tuple[SphericalFourBar, np.ndarray]:
    """
    Mechanism and input angles encoded by a design vector

    Args:
        design: The design vector
        n: Number of target points
        timing: Prescribed timing; defaults to uniform 2π/n spacing

    Returns:
        Tuple (mechanism, thetas)

    Raises:
        ValidationError: If the vector does not match n
        DegenerateMechanism: If adjacent joints coincide or are antipodal
    """
    if design.n_points != n:
        raise ValidationError(f"Design vector encodes {design.n_points} points, problem has {n}")
    mech = build_mechanism(design.joint_coords, design.beta, design.gamma)
    if design.mode is SynthesisMode.FREE:
        thetas = design.thetas.copy()
    else:
        timing = timing or Timing.uniform(n)
        thetas = timing.thetas(design.values[0])
    return mech, thetas


def encode(mech: SphericalFourBar, thetas: Sequence[float], mode: SynthesisMode,
           n_points: Optional[int] = None) -> DesignVector:
    """
    Design vector for a mechanism and its input angles

    In prescribed mode only thetas[0] is stored; n_points defaults to
    len(thetas).
    """
    thetas = [float(t) for t in thetas]
    n_points = n_points or len(thetas)
    theta_part = thetas[:1] if mode is SynthesisMode.PRESCRIBED else thetas
    phis = [c[0] for c in mech.joint_coords]
    etas = [c[1] for c in mech.joint_coords]
    values = theta_part + [mech.beta, mech.gamma] + phis + etas
    return DesignVector(mode=mode, values=np.array(values), n_points=n_points)
