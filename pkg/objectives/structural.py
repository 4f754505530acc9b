"""
Structural error of a spherical four-bar against a target path.

f_ob = Σ ‖r_di - r_gen(θ_i)‖². Since ‖e_i‖² = 2(1 - cos δ_i) grows strictly
with the geodesic error δ_i on [0, π], minimizing f_ob minimizes every δ_i.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import INFEASIBLE_PENALTY
from geometry.so3 import UnitVector3
from mechanism import kinematics
from objectives.base import BaseObjective
from objectives.design import (DesignBounds, DesignVector, SynthesisMode, TargetPath, Timing,
                               design_bounds, design_size)
from utils.exceptions import ValidationError
from utils.helpers import clamp_unit

logger = logging.getLogger(__name__)


@dataclass
class EvaluationReport:
    """
    Outcome of evaluating one design vector

    Infeasible points carry NaN in per_point_errors and geodesic_errors, and
    f_ob is then the graded penalty.
    """
    f_ob: float
    per_point_errors: List[float] = field(default_factory=list)
    geodesic_errors: List[float] = field(default_factory=list)
    feasible: bool = True

    @property
    def infeasible_count(self) -> int:
        return sum(1 for e in self.per_point_errors if math.isnan(e))


def _as_array(v) -> np.ndarray:
    return v.to_array() if isinstance(v, UnitVector3) else np.asarray(v, dtype=float)


def geodesic_error(r_d, r_gen) -> float:
    """Arc length δ between a desired and a generated point"""
    return float(np.arccos(clamp_unit(np.dot(_as_array(r_d), _as_array(r_gen)))))


def penalty(infeasible_count) -> np.ndarray:
    """INFEASIBLE_PENALTY plus one per violated point"""
    return INFEASIBLE_PENALTY + np.asarray(infeasible_count, dtype=float)


def _aggregate(errors: np.ndarray) -> np.ndarray:
    """Row sums of squared errors, or the graded penalty for rows with NaN"""
    infeasible = np.isnan(errors)
    counts = infeasible.sum(axis=1)
    totals = np.where(infeasible, 0.0, errors).sum(axis=1)
    return np.where(counts > 0, penalty(counts), totals)


def theta_differences(thetas: Sequence[float]) -> Tuple[List[float], float]:
    """
    Consecutive input-angle differences and their mean

    Args:
        thetas: Ascending input angles (at least two)

    Returns:
        Tuple (diffs, mean); the mean telescopes to (θn - θ1)/(n - 1)
    """
    diffs = np.diff(np.asarray(thetas, dtype=float))
    if diffs.size == 0:
        raise ValueError("At least two input angles are needed for differences")
    return diffs.tolist(), float(np.mean(diffs))


class StructuralErrorObjective(BaseObjective):
    """
    Vectorized structural error for one synthesis problem

    Args:
        path: Target points
        mode: Prescribed or free timing
        timing: Prescribed timing (defaults to uniform 2π/n)
    """
    def __init__(self, path: TargetPath, mode: SynthesisMode, timing: Optional[Timing] = None):
        super().__init__(name=f"structural_error_{mode.value}")
        self.path = path
        self.mode = mode
        self.n_points = len(path)
        self.timing = timing or Timing.uniform(self.n_points)
        if len(self.timing.offsets) != self.n_points:
            raise ValueError(f"Timing has {len(self.timing.offsets)} offsets for {self.n_points} points")
        self.dimension = design_size(mode, self.n_points)

    def bounds(self) -> DesignBounds:
        return design_bounds(self.mode, self.n_points, self.timing)

    def thetas(self, values: np.ndarray) -> np.ndarray:
        """Input angles of a stack of design vectors, shape (m, n)"""
        if self.mode is SynthesisMode.FREE:
            return values[:, :self.n_points]
        return self.timing.thetas(values[:, 0])

    def squared_errors(self, values: np.ndarray) -> np.ndarray:
        """
        ‖r_di - r_gen(θ_i)‖² for a stack of designs, NaN where infeasible

        Args:
            values: Design vectors, shape (m, D)

        Returns:
            Array of shape (m, n)
        """
        values = np.atleast_2d(np.asarray(values, dtype=float))
        joints = kinematics.joint_points(values[:, -8:-4], values[:, -4:])
        state = kinematics.solve_linkage(joints, values[:, -10], values[:, -9], self.thetas(values))
        diff = self.path.points[np.newaxis] - state.r_gen
        return np.sum(diff * diff, axis=-1)

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        errors = self.squared_errors(values)
        self.evaluations += len(errors)
        return _aggregate(errors)

    def evaluate(self, values: np.ndarray) -> float:
        return float(self.evaluate_batch(np.asarray(values)[np.newaxis])[0])

    def report(self, design: DesignVector) -> EvaluationReport:
        """Full EvaluationReport for one design vector"""
        all_errors = self.squared_errors(design.values)
        errors = all_errors[0]
        infeasible = np.isnan(errors)
        # ‖e‖² = 2(1 - cos δ)  =>  δ = arccos(1 - ‖e‖²/2)
        deltas = np.arccos(clamp_unit(1.0 - 0.5 * errors))
        f_ob = float(_aggregate(all_errors)[0])
        if infeasible.any():
            logger.debug(f"{infeasible.sum()} of {len(errors)} points infeasible")
        return EvaluationReport(
            f_ob=f_ob,
            per_point_errors=errors.tolist(),
            geodesic_errors=deltas.tolist(),
            feasible=not infeasible.any(),
        )


def structural_error(design: DesignVector, path: TargetPath, timing: Optional[Timing] = None) -> EvaluationReport:
    """
    Structural error of a design against a target path

    Never raises for kinematic failures: degenerate mechanisms, missing
    assembly branches and unassemblable input angles all come back as an
    infeasible report with the graded penalty.

    Args:
        design: Design vector (prescribed or free)
        path: Target points
        timing: Prescribed timing (defaults to uniform 2π/n)

    Returns:
        EvaluationReport
    """
    if design.n_points != len(path):
        raise ValidationError(f"Design vector encodes {design.n_points} points, path has {len(path)}")
    return StructuralErrorObjective(path, design.mode, timing).report(design)
