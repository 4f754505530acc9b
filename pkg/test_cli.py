import logging
import math

import numpy as np
import pandas as pd
import pytest

from main import EXIT_INFEASIBLE, EXIT_OK, EXIT_VALIDATION, main
from objectives.structural import structural_error, theta_differences
from optimizers.runner import synthesize
from storage.files import ResultStore, load_design, load_problem

logger = logging.getLogger(__name__)


def stdout_value(text: str, key: str) -> str:
    for line in text.splitlines():
        if line.startswith(f"{key}:"):
            return line.split(":", 1)[1].strip()
    raise AssertionError(f"No '{key}' line in output")


@pytest.fixture
def small_problem(tmp_path, fixtures_dir):
    path = tmp_path / "small.env"
    path.write_text(
        "NAME=small\n"
        "MODE=prescribed\n"
        f"POINTS={fixtures_dir / 'target_path_64.csv'}\n"
        "POINT_STRIDE=8\n"
        "POPULATION_SIZE=12\n"
        "MAX_GENERATIONS=15\n"
        "SEED=3\n"
    )
    return path


def test_verify_prescribed_optimum(fixtures_dir, capsys):
    code = main(['verify', '--design', str(fixtures_dir / 'prescribed_optimum.env'),
                 '--problem', str(fixtures_dir / 'prescribed_problem.env')])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert float(stdout_value(out, 'f_ob')) <= 1e-4
    assert stdout_value(out, 'grashof') == 'True'
    assert float(stdout_value(out, 'alpha_1')) == pytest.approx(0.40142, abs=1e-3)
    assert 'delta_theta_mean' not in out


def test_verify_free_timing_optimum(fixtures_dir, capsys):
    code = main(['verify', '--design', str(fixtures_dir / 'free_timing_optimum.env'),
                 '--problem', str(fixtures_dir / 'free_problem.env')])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert float(stdout_value(out, 'f_ob')) <= 1e-3
    assert float(stdout_value(out, 'delta_theta_mean')) == pytest.approx(0.0981734, abs=1e-6)


def test_verify_rejects_wrong_vector_length(tmp_path, fixtures_dir):
    design = tmp_path / "short.env"
    design.write_text("MODE=free\nTHETA_1=0.1\nTHETA_2=0.2\nTHETA_3=0.3\nBETA=0.2\nGAMMA=0.4\n"
                      "PHI_1=0\nPHI_2=0.3\nPHI_3=0.2\nPHI_4=1\nETA_1=1.5\nETA_2=1.4\nETA_3=0.7\nETA_4=1.3\n")
    code = main(['verify', '--design', str(design), '--problem', str(fixtures_dir / 'free_problem.env')])
    assert code == EXIT_VALIDATION


def test_verify_degenerate_design_is_infeasible(tmp_path, fixtures_dir, capsys):
    design = tmp_path / "broken.env"
    design.write_text("MODE=prescribed\nN_POINTS=64\nTHETA_1=0.1\nBETA=0.2\nGAMMA=0.3\n"
                      "PHI_1=0\nPHI_2=0\nPHI_3=1\nPHI_4=2\nETA_1=1\nETA_2=1\nETA_3=1\nETA_4=1\n")
    code = main(['verify', '--design', str(design), '--problem', str(fixtures_dir / 'prescribed_problem.env')])
    assert code == EXIT_INFEASIBLE
    assert stdout_value(capsys.readouterr().out, 'feasible').startswith('False')


def test_empty_points_file_is_rejected(tmp_path):
    (tmp_path / "empty.csv").write_text("")
    problem = tmp_path / "problem.env"
    problem.write_text("MODE=prescribed\nPOINTS=empty.csv\n")
    assert main(['synthesize', '--problem', str(problem), '--out', str(tmp_path)]) == EXIT_VALIDATION


def test_missing_problem_file(tmp_path):
    assert main(['synthesize', '--problem', str(tmp_path / 'nope.env')]) == EXIT_VALIDATION


def test_problem_file_parsing(fixtures_dir):
    problem = load_problem(fixtures_dir / 'free_problem_reduced.env')
    assert len(problem.path) == 16
    assert problem.timing is None
    assert problem.settings == {'population_size': 150, 'max_generations': 20000}
    assert problem.seed_list() == [1, 2, 3, 4, 5]


def test_synthesize_writes_reproducible_result(small_problem, tmp_path, capsys):
    out_dir = tmp_path / "out"
    code = main(['synthesize', '--problem', str(small_problem), '--out', str(out_dir), '--gens', '10'])
    assert code == EXIT_OK
    assert 'best seed: 3' in capsys.readouterr().out

    stored = ResultStore.load_result(out_dir / "small_result.env")
    problem = load_problem(small_problem)
    report = structural_error(stored['design'], problem.path, problem.timing)
    assert report.f_ob == pytest.approx(stored['f_ob'], abs=1e-12)
    assert stored['seed'] == 3
    assert len(stored['geodesic_errors']) == 8

    history = pd.read_csv(out_dir / "small_history.csv")
    assert list(history.columns) == ['generation', 'best_f_ob', 'mean_f_ob']
    assert len(history) == 11
    assert history['best_f_ob'].is_monotonic_decreasing


def test_synthesize_is_deterministic(small_problem, tmp_path):
    for run in ('a', 'b'):
        assert main(['synthesize', '--problem', str(small_problem), '--out', str(tmp_path / run)]) == EXIT_OK
    first = load_design(tmp_path / 'a' / 'small_result.env')
    second = load_design(tmp_path / 'b' / 'small_result.env')
    np.testing.assert_array_equal(first.values, second.values)


def test_result_file_is_a_design_file(small_problem, tmp_path, capsys):
    out_dir = tmp_path / "out"
    assert main(['synthesize', '--problem', str(small_problem), '--out', str(out_dir), '--seeds', '2']) == EXIT_OK
    capsys.readouterr()
    code = main(['verify', '--design', str(out_dir / 'small_result.env'), '--problem', str(small_problem)])
    assert code in (EXIT_OK, EXIT_INFEASIBLE)
    stored = ResultStore.load_result(out_dir / 'small_result.env')
    assert float(stdout_value(capsys.readouterr().out, 'f_ob')) == pytest.approx(stored['f_ob'], rel=1e-6)


def test_trace_export(fixtures_dir, tmp_path):
    code = main(['trace', '--design', str(fixtures_dir / 'prescribed_optimum.env'), '--samples', '360',
                 '--out', str(tmp_path)])
    assert code == EXIT_OK
    frame = pd.read_csv(tmp_path / 'prescribed_optimum_trace.csv')
    assert len(frame) == 360
    assert frame['feasible'].all()
    gen = frame[['gen_x', 'gen_y', 'gen_z']].to_numpy()
    np.testing.assert_allclose(gen[0], gen[-1], atol=1e-6)
    np.testing.assert_allclose(np.linalg.norm(gen, axis=1), 1.0, atol=1e-12)


def test_trace_single_sample(fixtures_dir, tmp_path):
    assert main(['trace', '--design', str(fixtures_dir / 'prescribed_optimum.env'), '--samples', '1',
                 '--out', str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / 'prescribed_optimum_trace.csv')
    assert frame['theta'].tolist() == [0.0]


def test_trace_rejects_zero_samples(fixtures_dir):
    assert main(['trace', '--design', str(fixtures_dir / 'prescribed_optimum.env'), '--samples', '0']) == EXIT_VALIDATION


def test_thetadiff_published_free_timing(fixtures_dir, capsys):
    assert main(['thetadiff', '--design', str(fixtures_dir / 'free_timing_optimum.env')]) == EXIT_OK
    out = capsys.readouterr().out
    assert float(stdout_value(out, 'mean')) == pytest.approx(0.0981734, abs=1e-6)
    assert float(stdout_value(out, 'abs_mean_minus_uniform')) == pytest.approx(1.3e-6, abs=5e-7)
    assert out.count("\n") >= 63


def test_thetadiff_needs_free_timing(fixtures_dir):
    assert main(['thetadiff', '--design', str(fixtures_dir / 'prescribed_optimum.env')]) == EXIT_VALIDATION


@pytest.mark.slow
def test_prescribed_synthesis_reaches_published_quality(fixtures_dir, tmp_path):
    """Full-size prescribed-timing run; one of three seeds should get below 1e-5"""
    problem = load_problem(fixtures_dir / 'prescribed_problem.env')
    outcome = synthesize(problem.path, problem.mode, problem.timing, problem.seed_list(), problem.settings)
    assert outcome.f_ob <= 1e-5


@pytest.mark.slow
def test_reduced_free_timing_synthesis(fixtures_dir):
    """16-point free-timing run over five seeds"""
    problem = load_problem(fixtures_dir / 'free_problem_reduced.env')
    outcome = synthesize(problem.path, problem.mode, None, problem.seed_list(), problem.settings)
    assert float(np.median([r.best_fitness for r in outcome.runs])) <= 1e-3
    _, mean = theta_differences(outcome.design.thetas)
    assert abs(mean - 2 * math.pi / 16) <= 2e-2
