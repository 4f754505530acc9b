import logging
import math

import numpy as np
import pytest

from config import INFEASIBLE_PENALTY
from mechanism import kinematics
from mechanism.four_bar import grashof_check
from objectives.design import (BoundaryRule, DesignVector, SynthesisMode, TargetPath, Timing, decode,
                               design_bounds, design_labels, encode, prescribed_thetas)
from objectives.structural import StructuralErrorObjective, geodesic_error, structural_error, theta_differences
from geometry.so3 import UnitVector3
from utils.exceptions import ValidationError

logger = logging.getLogger(__name__)

PUBLISHED_LINKS = (0.40142, 0.82033, 0.92503, 0.99484)
FREE_TIMING_LINKS = (0.41098, 0.86264, 1.00480, 1.03999)


def degenerate_values():
    """Prescribed vector whose first two joints coincide"""
    return np.array([0.1, 0.2, 0.3, 0.0, 0.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0])


def test_prescribed_thetas():
    np.testing.assert_allclose(prescribed_thetas(0.0, 4), [0.0, math.pi / 2, math.pi, 3 * math.pi / 2])
    assert prescribed_thetas(0.48867, 64)[1] == pytest.approx(0.48867 + 2 * math.pi / 64, abs=1e-15)


def test_design_labels():
    assert design_labels(SynthesisMode.PRESCRIBED, 64) == [
        'THETA_1', 'BETA', 'GAMMA', 'PHI_1', 'PHI_2', 'PHI_3', 'PHI_4', 'ETA_1', 'ETA_2', 'ETA_3', 'ETA_4']
    assert len(design_labels(SynthesisMode.FREE, 16)) == 26


def test_design_vector_length_checked():
    with pytest.raises(ValidationError):
        DesignVector(SynthesisMode.FREE, np.zeros(11), n_points=64)


def test_target_path_validation():
    with pytest.raises(ValidationError):
        TargetPath.from_points([(1, 0, 0), (0, 1, 0)])
    with pytest.raises(ValidationError):
        TargetPath.from_points([(1, 0, 0), (0, 1, 0), (0, 0, 1.1)])
    path = TargetPath.from_points([(1, 0, 0), (0, 1, 0), (0, 0, 1.0005)])
    np.testing.assert_allclose(np.linalg.norm(path.points, axis=1), 1.0, atol=1e-15)


def test_subsample_keeps_first_point(target_path):
    reduced = target_path.subsample(4)
    assert len(reduced) == 16
    np.testing.assert_array_equal(reduced.points[1], target_path.points[4])


def test_bounds_and_rules():
    bounds = design_bounds(SynthesisMode.FREE, 5)
    assert bounds.theta_block == slice(0, 5)
    assert bounds.lower[6] == -math.pi and bounds.upper[6] == math.pi
    assert bounds.rules[-1] is BoundaryRule.REFLECT
    assert bounds.rules[0] is BoundaryRule.PERIODIC
    assert design_bounds(SynthesisMode.PRESCRIBED, 5).theta_block == slice(0, 0)


def test_known_first_angle_pins_bounds():
    bounds = design_bounds(SynthesisMode.PRESCRIBED, 64, Timing.uniform(64, fixed_theta1=0.5))
    assert bounds.lower[0] == bounds.upper[0] == 0.5
    assert len(bounds.lower) == 11


def test_timing_variants():
    np.testing.assert_allclose(Timing.spaced(3, 0.1).thetas(1.0), [1.0, 1.1, 1.2])
    explicit = Timing.explicit([0.5, 0.7, 1.5])
    np.testing.assert_allclose(explicit.thetas(0.0), [0.0, 0.2, 1.0])
    assert explicit.fixed_theta1 is None
    assert Timing.explicit([0.5, 0.7, 1.5], fix_first=True).fixed_theta1 == 0.5
    assert Timing.uniform(4).thetas(np.zeros(3)).shape == (3, 4)


def test_decode_published_vectors(prescribed_design, free_design):
    mech, thetas = decode(prescribed_design, 64)
    np.testing.assert_allclose(mech.link_lengths, PUBLISHED_LINKS, atol=1e-3)
    assert thetas[1] == pytest.approx(0.48867 + 2 * math.pi / 64)

    free_mech, free_thetas = decode(free_design, 64)
    # both optima describe nearly the same linkage
    np.testing.assert_allclose(free_mech.link_lengths, PUBLISHED_LINKS, atol=0.1)
    np.testing.assert_allclose(free_mech.link_lengths, FREE_TIMING_LINKS, atol=1e-4)
    assert grashof_check(free_mech.link_lengths)
    assert free_thetas[-1] == 6.18493


def test_decode_rejects_point_mismatch(prescribed_design):
    with pytest.raises(ValidationError):
        decode(prescribed_design, 32)


def test_encode_inverts_decode(prescribed_design, free_design):
    for design in (prescribed_design, free_design):
        mech, thetas = decode(design, 64)
        again = encode(mech, thetas, design.mode, 64)
        np.testing.assert_allclose(again.values, design.values, atol=1e-15)


def test_prescribed_optimum(prescribed_design, target_path):
    report = structural_error(prescribed_design, target_path)
    assert report.feasible
    assert report.f_ob <= 1e-4
    assert report.f_ob == pytest.approx(2.19e-8, rel=0.05)
    assert report.f_ob == pytest.approx(sum(report.per_point_errors), abs=1e-12)


def test_free_timing_optimum(free_design, target_path):
    report = structural_error(free_design, target_path)
    assert report.feasible
    assert report.f_ob <= 1e-3
    assert report.f_ob == pytest.approx(5.72e-6, rel=0.05)
    assert max(report.geodesic_errors) < 5e-3


@pytest.mark.parametrize('which, size', [('prescribed', 11), ('free', 74)])
def test_every_coordinate_moves_the_error(which, size, prescribed_design, free_design, target_path):
    design = prescribed_design if which == 'prescribed' else free_design
    assert len(design.values) == size
    base = structural_error(design, target_path).f_ob
    for k in range(size):
        values = design.values.copy()
        values[k] += 1e-4
        changed = structural_error(DesignVector(design.mode, values, 64), target_path)
        assert changed.feasible
        assert changed.f_ob != base, design_labels(design.mode, 64)[k]


def test_own_trajectory_has_zero_error(prescribed_design):
    mech, thetas = decode(prescribed_design, 64)
    state = kinematics.solve_linkage(mech.joint_array()[np.newaxis], np.array([mech.beta]),
                                     np.array([mech.gamma]), thetas[np.newaxis])
    path = TargetPath(state.r_gen[0])
    assert structural_error(prescribed_design, path).f_ob <= 1e-20


def test_degenerate_mechanism_gets_penalty(target_path):
    design = DesignVector(SynthesisMode.PRESCRIBED, degenerate_values(), 64)
    report = structural_error(design, target_path)
    assert not report.feasible
    assert report.infeasible_count == 64
    assert report.f_ob == INFEASIBLE_PENALTY + 64


def test_path_length_mismatch(prescribed_design, target_path):
    design = DesignVector(SynthesisMode.PRESCRIBED, prescribed_design.values, 16)
    with pytest.raises(ValidationError):
        structural_error(design, target_path)


def test_batch_matches_single_reports(prescribed_design, target_path, rng):
    objective = StructuralErrorObjective(target_path, SynthesisMode.PRESCRIBED)
    bounds = objective.bounds()
    values = rng.uniform(bounds.lower, bounds.upper, size=(20, 11))
    values[0] = prescribed_design.values
    values[1] = degenerate_values()
    batch = objective.evaluate_batch(values)
    for row, f in zip(values, batch):
        report = structural_error(DesignVector(SynthesisMode.PRESCRIBED, row, 64), target_path)
        assert report.f_ob == pytest.approx(f, rel=1e-12)
    assert objective.evaluations == 20


def test_geodesic_error_examples():
    x = UnitVector3(1, 0, 0)
    y = UnitVector3(0, 1, 0)
    assert geodesic_error(x, x) == 0.0
    assert geodesic_error(x, y) == pytest.approx(math.pi / 2)


def test_chord_and_arc_identity(rng):
    """‖e‖² = 2(1 - cos δ) for random pairs"""
    a = rng.normal(size=(10000, 3))
    b = rng.normal(size=(10000, 3))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    chord = np.sum((a - b) ** 2, axis=1)
    delta = np.array([geodesic_error(p, q) for p, q in zip(a, b)])
    np.testing.assert_allclose(chord, 2.0 * (1.0 - np.cos(delta)), atol=1e-12)


def test_published_free_timing_spacing(free_design):
    diffs, mean = theta_differences(free_design.thetas)
    assert len(diffs) == 63
    assert mean == pytest.approx(0.0981734, abs=1e-6)
    assert abs(mean - 2 * math.pi / 64) == pytest.approx(1.3e-6, abs=5e-7)


def test_theta_differences_small_cases(rng):
    _, mean = theta_differences(prescribed_thetas(0.2, 10))
    assert mean == pytest.approx(2 * math.pi / 10, abs=1e-15)

    diffs, mean = theta_differences([0.3, 1.0])
    assert diffs == [pytest.approx(0.7)] and mean == diffs[0]

    thetas = np.sort(rng.uniform(0, 2 * math.pi, size=30))
    _, mean = theta_differences(thetas)
    assert mean == pytest.approx((thetas[-1] - thetas[0]) / 29, abs=1e-14)

    with pytest.raises(ValueError):
        theta_differences([1.0])
