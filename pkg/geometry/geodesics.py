"""
Great-circle arcs on the unit sphere and signed angles between them.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from config import PARALLEL_TOLERANCE
from geometry.so3 import UnitVector3, apply, normalize_rows, rotation_about_axis
from utils.exceptions import DegenerateGeodesic
from utils.helpers import clamp_unit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeodesicArc:
    """The shorter great-circle arc from start to end"""
    start: UnitVector3
    end: UnitVector3
    axis: UnitVector3
    arc_angle: float


def geodesic_between(h1: UnitVector3, h2: UnitVector3) -> GeodesicArc:
    """
    Build the geodesic from h1 to h2

    The arc is h1 rotated about n = (h1 × h2)/|h1 × h2| by angles in
    [0, arccos(h1·h2)].

    Args:
        h1: Start point
        h2: End point

    Returns:
        The arc

    Raises:
        DegenerateGeodesic: If h1 and h2 are parallel or antiparallel
    """
    cos_angle = h1.dot(h2)
    if abs(cos_angle) >= 1.0 - PARALLEL_TOLERANCE:
        raise DegenerateGeodesic(f"Points {h1} and {h2} are parallel or antiparallel")
    axis = UnitVector3.from_iterable(np.cross(h1.to_array(), h2.to_array()))
    return GeodesicArc(start=h1, end=h2, axis=axis,
                       arc_angle=math.acos(float(clamp_unit(cos_angle))))


def evaluate_geodesic(arc: GeodesicArc, t: float) -> UnitVector3:
    """
    Point at arc length t from the start

    t outside [0, arc_angle] continues along the same great circle.
    """
    return apply(rotation_about_axis(t, arc.axis), arc.start)


def vertex_angles(vertex: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Vectorized signed angle at vertex from the geodesic towards a to the one towards b

    Tangents are the projections of a and b onto the tangent plane at the
    vertex; the angle is positive counter-clockwise about the outward normal.
    Degenerate tangents give NaN.

    Args:
        vertex: Unit vectors, shape (..., 3)
        a: First targets, shape (..., 3)
        b: Second targets, shape (..., 3)

    Returns:
        Angles in (-π, π], shape (...)
    """
    t_a = normalize_rows(a - np.sum(a * vertex, axis=-1, keepdims=True) * vertex)
    t_b = normalize_rows(b - np.sum(b * vertex, axis=-1, keepdims=True) * vertex)
    sine = np.sum(vertex * np.cross(t_a, t_b), axis=-1)
    cosine = np.sum(t_a * t_b, axis=-1)
    angle = np.arctan2(sine, cosine)
    # arctan2 gives -π for a -0.0 sine
    return np.where(angle <= -np.pi, np.pi, angle)


def spherical_angle_at_vertex(vertex: UnitVector3, a: UnitVector3, b: UnitVector3) -> float:
    """
    Signed angle at `vertex` between the geodesics vertex→a and vertex→b

    Args:
        vertex: Common start point of both geodesics
        a: End of the first geodesic
        b: End of the second geodesic

    Returns:
        Angle in (-π, π], counter-clockwise about `vertex` positive

    Raises:
        DegenerateGeodesic: If a or b is parallel or antiparallel to the vertex
    """
    for end in (a, b):
        if abs(vertex.dot(end)) >= 1.0 - PARALLEL_TOLERANCE:
            raise DegenerateGeodesic(f"No tangent from {vertex} towards {end}")
    return float(vertex_angles(vertex.to_array(), a.to_array(), b.to_array()))
