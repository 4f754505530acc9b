"""
Vectorized forward kinematics of spherical 4R linkages.

These kernels work on stacks of mechanisms at once: joints have shape
(m, 4, 3), coupler parameters shape (m,), input angles shape (m, n). The
scalar API in mechanism.four_bar and the batch objective both go through
here, so a design evaluated alone or inside a population gives the same
number.
"""
import logging
from typing import NamedTuple

import numpy as np

from config import BRANCH_CLOSURE_TOLERANCE, DISCRIMINANT_TOLERANCE, PARALLEL_TOLERANCE
from geometry.geodesics import vertex_angles
from geometry.so3 import normalize_rows, rotate_vectors
from utils.helpers import clamp_unit, wrap_to_pi

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * np.pi

# Adjacent joint pairs (x1,x2), (x2,x3), (x3,x4), (x4,x1) give α1..α4
_LINKS = ((0, 1), (1, 2), (2, 3), (3, 0))


class LinkageGeometry(NamedTuple):
    """Derived quantities of a stack of mechanisms"""
    link_lengths: np.ndarray  # (m, 4)
    theta0: np.ndarray  # (m,)
    phi0: np.ndarray  # (m,)
    degenerate: np.ndarray  # (m,) bool, some adjacent pair parallel/antiparallel


class LinkageState(NamedTuple):
    """Positions of a stack of mechanisms over a grid of input angles"""
    r2: np.ndarray  # (m, n, 3)
    r3: np.ndarray  # (m, n, 3)
    r_gen: np.ndarray  # (m, n, 3)
    phi: np.ndarray  # (m, n)
    feasible: np.ndarray  # (m, n) bool
    branch_sign: np.ndarray  # (m,) +1 or -1
    valid: np.ndarray  # (m,) bool, non-degenerate with an assembling branch


def joint_points(phi, eta) -> np.ndarray:
    """(cos φ sin η, sin φ sin η, cos η), broadcast over the inputs"""
    phi = np.asarray(phi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.stack([np.cos(phi) * np.sin(eta),
                     np.sin(phi) * np.sin(eta),
                     np.cos(eta)], axis=-1)


def linkage_geometry(joints: np.ndarray) -> LinkageGeometry:
    """
    Link lengths and initial angles for a stack of mechanisms

    Θ0 is the signed angle at x1 from the fixed link (towards x4) to the
    input link (towards x2); Φ0 the signed angle at x4 from the fixed link
    (towards x1) to the output link (towards x3).

    Args:
        joints: Joint unit vectors, shape (m, 4, 3)

    Returns:
        LinkageGeometry for the stack
    """
    x1, x2, x3, x4 = (joints[..., k, :] for k in range(4))
    dots = np.stack([np.sum(joints[..., i, :] * joints[..., j, :], axis=-1) for i, j in _LINKS], axis=-1)
    degenerate = np.any(np.abs(dots) >= 1.0 - PARALLEL_TOLERANCE, axis=-1)
    link_lengths = np.arccos(clamp_unit(dots))
    theta0 = vertex_angles(x1, x4, x2)
    phi0 = vertex_angles(x4, x1, x3)
    return LinkageGeometry(link_lengths, theta0, phi0, degenerate)


def closure_coefficients(link_lengths: np.ndarray, u: np.ndarray):
    """
    Coefficients of the closure equation B cos w - A sin w + C = 0

    Here u = θ + Θ0 and w = φ + Φ0.

    Args:
        link_lengths: α1..α4 along the last axis, shape (..., 4); must
            broadcast against u once the last axis is split off
        u: Input angles measured from the fixed link

    Returns:
        Tuple (A, B, C) with the broadcast shape of u
    """
    s1, s3, s4 = (np.sin(link_lengths[..., k]) for k in (0, 2, 3))
    c1, c2, c3, c4 = (np.cos(link_lengths[..., k]) for k in range(4))
    cos_u = np.cos(u)
    a = s1 * s3 * np.sin(u)
    b = c1 * s3 * s4 - s1 * s3 * c4 * cos_u
    c = s1 * c3 * s4 * cos_u + c1 * c3 * c4 - c2
    return a, b, c


def output_angles(a, b, c, sign, phi0):
    """
    Solve the closure equation for φ on one branch

    φ = 2 atan((A ± √(A² + B² - C²)) / (C - B)) - Φ0, reduced to (-π, π].
    Slightly negative discriminants within DISCRIMINANT_TOLERANCE count as
    tangent (zero); below that the configuration is infeasible.

    Returns:
        Tuple (phi, discriminant, feasible)
    """
    discriminant = a * a + b * b - c * c
    feasible = discriminant >= -DISCRIMINANT_TOLERANCE
    root = np.sqrt(np.maximum(discriminant, 0.0))
    w = 2.0 * np.arctan2(a + sign * root, c - b)
    return wrap_to_pi(w - phi0), discriminant, feasible


def select_branch_signs(joints: np.ndarray, geometry: LinkageGeometry):
    """
    Pick, per mechanism, the branch that reproduces x3 at θ = 0

    The plus branch wins ties (double roots).

    Returns:
        Tuple (sign, ok): sign is +1/-1 per mechanism, ok flags whether the
        chosen branch closes within BRANCH_CLOSURE_TOLERANCE
    """
    x3 = joints[..., 2, :]
    x4 = joints[..., 3, :]
    a, b, c = closure_coefficients(geometry.link_lengths, geometry.theta0)
    errors = []
    for sign in (1.0, -1.0):
        phi, _, feasible = output_angles(a, b, c, sign, geometry.phi0)
        r3 = rotate_vectors(phi, x4, x3)
        error = np.linalg.norm(r3 - x3, axis=-1)
        errors.append(np.where(feasible, error, np.inf))
    plus_error, minus_error = errors
    sign = np.where(minus_error < plus_error, -1.0, 1.0)
    ok = np.minimum(plus_error, minus_error) <= BRANCH_CLOSURE_TOLERANCE
    return sign, ok


def coupler_points(r2: np.ndarray, r3: np.ndarray, nu) -> np.ndarray:
    """Rotate r2 by ν about the coupler normal r2 × r3 (ν = α2 lands on r3)"""
    n23 = normalize_rows(np.cross(r2, r3))
    return rotate_vectors(nu, n23, r2)


def tracer_points(r2: np.ndarray, r3: np.ndarray, beta, gamma) -> np.ndarray:
    """r_gen = R(π/2, r_cp(β)) r_cp(β + γ)"""
    n23 = normalize_rows(np.cross(r2, r3))
    base = rotate_vectors(beta, n23, r2)
    offset = rotate_vectors(np.asarray(beta) + np.asarray(gamma), n23, r2)
    return rotate_vectors(HALF_PI, base, offset)


def solve_linkage(joints: np.ndarray, beta: np.ndarray, gamma: np.ndarray,
                  thetas: np.ndarray) -> LinkageState:
    """
    Input, output and tracer positions for a stack of mechanisms

    The branch is chosen once per mechanism at assembly and held for every
    input angle. Infeasible entries carry NaN positions.

    Args:
        joints: Joint unit vectors, shape (m, 4, 3)
        beta: Coupler arc to the tracer base, shape (m,)
        gamma: Tracer offset arc, shape (m,)
        thetas: Input rotations from the assembly position, shape (m, n)

    Returns:
        LinkageState for the stack
    """
    joints = np.asarray(joints, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    beta = np.asarray(beta, dtype=float)[:, np.newaxis]
    gamma = np.asarray(gamma, dtype=float)[:, np.newaxis]

    with np.errstate(invalid='ignore', divide='ignore'):
        geometry = linkage_geometry(joints)
        sign, branch_ok = select_branch_signs(joints, geometry)
        valid = ~geometry.degenerate & branch_ok

        x1, x2, x3, x4 = (joints[:, np.newaxis, k, :] for k in range(4))
        a, b, c = closure_coefficients(geometry.link_lengths[:, np.newaxis, :],
                                       thetas + geometry.theta0[:, np.newaxis])
        phi, _, feasible = output_angles(a, b, c, sign[:, np.newaxis], geometry.phi0[:, np.newaxis])

        r2 = rotate_vectors(thetas, x1, x2)
        r3 = rotate_vectors(phi, x4, x3)
        coupler_cos = np.sum(r2 * r3, axis=-1)
        feasible = feasible & valid[:, np.newaxis] & (np.abs(coupler_cos) < 1.0 - PARALLEL_TOLERANCE)

        r_gen = tracer_points(r2, r3, beta, gamma)

    mask = ~feasible[..., np.newaxis]
    return LinkageState(
        r2=np.where(mask, np.nan, r2),
        r3=np.where(mask, np.nan, r3),
        r_gen=np.where(mask, np.nan, r_gen),
        phi=np.where(feasible, phi, np.nan),
        feasible=feasible,
        branch_sign=sign,
        valid=valid,
    )
