"""
Spherical 4R linkage: construction and scalar forward kinematics.

Joints x1..x4 sit on the unit sphere; the links are the arcs x1x2 (input),
x2x3 (coupler), x3x4 (output) and x4x1 (fixed). θ rotates x2 about x1 and φ
rotates x3 about x4, both measured from the assembly position.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from config import PARALLEL_TOLERANCE, ROOT_MAX_ITERATIONS, ROOT_XTOL, SINGULAR_TOLERANCE, DISCRIMINANT_TOLERANCE
from geometry.so3 import UnitVector3, apply, rotate_vectors, rotation_about_axis
from mechanism import kinematics
from utils.exceptions import (DegenerateCoupler, DegenerateMechanism, InfeasibleConfiguration,
                              NoConvergence, NoValidBranch, SingularConfiguration)
from utils.helpers import wrap_to_pi

logger = logging.getLogger(__name__)

JointCoords = Sequence[Tuple[float, float]]


class Branch(Enum):
    """Sign choice in the half-angle closure solution (assembly mode)"""
    PLUS = 1
    MINUS = -1

    @property
    def sign(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class SphericalFourBar:
    """
    An immutable spherical four-bar with a coupler tracer point

    Build instances with build_mechanism(); every derived field is filled in
    there.
    """
    joint_coords: Tuple[Tuple[float, float], ...]
    beta: float
    gamma: float
    joints: Tuple[UnitVector3, UnitVector3, UnitVector3, UnitVector3]
    link_lengths: Tuple[float, float, float, float]
    theta0: float
    phi0: float

    @property
    def x1(self) -> UnitVector3:
        return self.joints[0]

    @property
    def x2(self) -> UnitVector3:
        return self.joints[1]

    @property
    def x3(self) -> UnitVector3:
        return self.joints[2]

    @property
    def x4(self) -> UnitVector3:
        return self.joints[3]

    def joint_array(self) -> np.ndarray:
        """Joints as a (4, 3) array"""
        return np.array([j.to_array() for j in self.joints])


def joint_point(phi: float, eta: float) -> UnitVector3:
    """Joint position from azimuth φ and colatitude η"""
    return UnitVector3.from_iterable(kinematics.joint_points(phi, eta))


def build_mechanism(joint_coords: JointCoords, beta: float, gamma: float) -> SphericalFourBar:
    """
    Build a mechanism from four (azimuth, colatitude) pairs and the tracer offsets

    Args:
        joint_coords: ((φ1, η1), ..., (φ4, η4))
        beta: Arc along the coupler from x2 to the tracer base
        gamma: Arc from the tracer base to the tracer, turned a quarter turn off the coupler

    Returns:
        The mechanism

    Raises:
        DegenerateMechanism: If adjacent joints are parallel or antiparallel
    """
    coords = tuple((float(phi), float(eta)) for phi, eta in joint_coords)
    if len(coords) != 4:
        raise ValueError(f"Expected 4 joint coordinate pairs, got {len(coords)}")

    joints = kinematics.joint_points([c[0] for c in coords], [c[1] for c in coords])
    geometry = kinematics.linkage_geometry(joints[np.newaxis])
    if geometry.degenerate[0]:
        raise DegenerateMechanism(f"Adjacent joints are parallel or antiparallel: {coords}")

    return SphericalFourBar(
        joint_coords=coords,
        beta=float(beta),
        gamma=float(gamma),
        joints=tuple(UnitVector3.from_iterable(j) for j in joints),
        link_lengths=tuple(float(a) for a in geometry.link_lengths[0]),
        theta0=float(geometry.theta0[0]),
        phi0=float(geometry.phi0[0]),
    )


def input_point(mech: SphericalFourBar, theta: float) -> UnitVector3:
    """r2(θ) = R(θ, x1) x2"""
    return apply(rotation_about_axis(theta, mech.x1), mech.x2)


def output_point(mech: SphericalFourBar, phi: float) -> UnitVector3:
    """r3(φ) = R(φ, x4) x3"""
    return apply(rotation_about_axis(phi, mech.x4), mech.x3)


def output_angle_analytic(mech: SphericalFourBar, theta: float, branch: Branch) -> float:
    """
    Output rotation φ(θ) that keeps the coupler length constant

    Args:
        mech: The mechanism
        theta: Input rotation from the assembly position
        branch: Assembly branch

    Returns:
        φ in (-π, π]

    Raises:
        InfeasibleConfiguration: If the discriminant A² + B² - C² is negative
        SingularConfiguration: If |C - B| < SINGULAR_TOLERANCE
    """
    lengths = np.array(mech.link_lengths)
    a, b, c = kinematics.closure_coefficients(lengths, theta + mech.theta0)
    discriminant = a * a + b * b - c * c
    if discriminant < -DISCRIMINANT_TOLERANCE:
        raise InfeasibleConfiguration(f"Cannot assemble at theta={theta:.6f} (discriminant {discriminant:.3e})")
    if abs(c - b) < SINGULAR_TOLERANCE:
        raise SingularConfiguration(f"C - B vanishes at theta={theta:.6f}")
    root = math.sqrt(max(discriminant, 0.0))
    w = 2.0 * math.atan((a + branch.sign * root) / (c - b))
    return float(wrap_to_pi(w - mech.phi0))


def output_angle_numeric(mech: SphericalFourBar, theta: float, phi_guess: float) -> float:
    """
    Root of the coupler-length condition nearest to phi_guess

    The full circle is scanned on a grid centred on the guess, the sign
    change closest to it is bracketed and refined with Brent's method.

    Args:
        mech: The mechanism
        theta: Input rotation from the assembly position
        phi_guess: Where to look for the root

    Returns:
        φ in (-π, π]

    Raises:
        NoConvergence: If no bracket exists or the solver hits its iteration cap
    """
    r2 = input_point(mech, theta).to_array()
    x3 = mech.x3.to_array()
    x4 = mech.x4.to_array()
    target = mech.x2.dot(mech.x3)

    def residual(phi):
        return float(np.dot(rotate_vectors(phi, x4, x3), r2) - target)

    steps = 72
    h = 2.0 * math.pi / steps
    nodes = phi_guess + (np.arange(-steps // 2 - 1, steps // 2 + 1) + 0.5) * h
    values = rotate_vectors(nodes, x4, x3) @ r2 - target
    brackets = np.flatnonzero(values[:-1] * values[1:] <= 0.0)
    if brackets.size == 0:
        raise NoConvergence(f"No sign change of the closure residual at theta={theta:.6f}")

    midpoints = 0.5 * (nodes[brackets] + nodes[brackets + 1])
    k = brackets[np.argmin(np.abs(midpoints - phi_guess))]
    try:
        root, result = brentq(residual, nodes[k], nodes[k + 1], xtol=ROOT_XTOL,
                              maxiter=ROOT_MAX_ITERATIONS, full_output=True, disp=False)
    except RuntimeError as e:
        raise NoConvergence(f"Closure solver failed at theta={theta:.6f}: {e}") from e
    if not result.converged:
        raise NoConvergence(f"Closure solver did not converge at theta={theta:.6f}: {result.flag}")
    return float(wrap_to_pi(root))


def _coupler_joints(mech: SphericalFourBar, theta: float, branch: Branch) -> Tuple[np.ndarray, np.ndarray]:
    phi = output_angle_analytic(mech, theta, branch)
    r2 = input_point(mech, theta)
    r3 = output_point(mech, phi)
    if abs(r2.dot(r3)) >= 1.0 - PARALLEL_TOLERANCE:
        raise DegenerateCoupler(f"Coupler joints parallel at theta={theta:.6f}")
    return r2.to_array(), r3.to_array()


def coupler_point(mech: SphericalFourBar, theta: float, nu: float, branch: Branch) -> UnitVector3:
    """
    Point at arc ν along the coupler great circle, starting from r2(θ)

    Raises:
        InfeasibleConfiguration: If the linkage cannot be assembled at θ
        DegenerateCoupler: If r2(θ) and r3(φ(θ)) are parallel
    """
    r2, r3 = _coupler_joints(mech, theta, branch)
    return UnitVector3.from_iterable(kinematics.coupler_points(r2, r3, nu))


def generated_point(mech: SphericalFourBar, theta: float, branch: Branch) -> UnitVector3:
    """
    Tracer point r_gen(θ): r_cp(θ, β + γ) turned a quarter turn about r_cp(θ, β)

    Raises:
        InfeasibleConfiguration: If the linkage cannot be assembled at θ
        DegenerateCoupler: If r2(θ) and r3(φ(θ)) are parallel
    """
    r2, r3 = _coupler_joints(mech, theta, branch)
    return UnitVector3.from_iterable(kinematics.tracer_points(r2, r3, mech.beta, mech.gamma))


def select_branch(mech: SphericalFourBar) -> Branch:
    """
    Branch that reproduces the assembly position x3 at θ = 0

    Raises:
        NoValidBranch: If neither branch closes within BRANCH_CLOSURE_TOLERANCE
    """
    joints = mech.joint_array()[np.newaxis]
    geometry = kinematics.linkage_geometry(joints)
    sign, ok = kinematics.select_branch_signs(joints, geometry)
    if not ok[0]:
        raise NoValidBranch(f"Neither branch assembles mechanism {mech.joint_coords}")
    branch = Branch.PLUS if sign[0] > 0 else Branch.MINUS
    logger.debug(f"Selected branch {branch.name}")
    return branch


def grashof_check(link_lengths: Sequence[float]) -> bool:
    """
    Spherical Grashof test

    Each arc is folded to min(α, π - α), then shortest + longest must not
    exceed the sum of the other two. Only meaningful for chains that can be
    assembled; see crank_rotates() for a direct check.
    """
    folded = sorted(min(a, math.pi - a) for a in link_lengths)
    return folded[0] + folded[3] <= folded[1] + folded[2] + 1e-12


def crank_rotates(link_lengths: Sequence[float], samples: int = 720) -> bool:
    """
    True if the input link can make a full turn

    The closure discriminant must stay non-negative for every input angle;
    it depends on the link lengths only, so Θ0 does not matter here.
    """
    u = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    a, b, c = kinematics.closure_coefficients(np.asarray(link_lengths, dtype=float), u)
    return bool(np.all(a * a + b * b - c * c >= -DISCRIMINANT_TOLERANCE))


def trace(mech: SphericalFourBar, samples: int) -> Tuple[np.ndarray, kinematics.LinkageState]:
    """
    Sample the mechanism over one input turn

    Input angles are linspace(0, 2π, samples), so a full-rotation crank
    starts and ends at the same tracer position; samples = 1 gives θ = 0
    only. Infeasible samples carry NaN positions.

    Returns:
        Tuple (thetas, LinkageState with a single mechanism axis)
    """
    if samples < 1:
        raise ValueError(f"Need at least one sample, got {samples}")
    thetas = np.linspace(0.0, 2.0 * math.pi, samples) if samples > 1 else np.zeros(1)
    state = kinematics.solve_linkage(mech.joint_array()[np.newaxis], np.array([mech.beta]),
                                     np.array([mech.gamma]), thetas[np.newaxis])
    return thetas, state
