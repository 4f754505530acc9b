import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

from config import DE_WORKERS, LOG_FILE, LOG_LEVEL
from mechanism.four_bar import SphericalFourBar, crank_rotates, grashof_check, trace
from objectives.design import DesignVector, SynthesisMode, decode
from objectives.structural import EvaluationReport, structural_error, theta_differences
from optimizers.runner import synthesize
from storage.files import ResultStore, load_design, load_problem, trace_frame
from utils.exceptions import MechanismError, SynthesisError, ValidationError
from utils.helpers import format_angle

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2


def setup_logging(level: str = LOG_LEVEL, log_file: Optional[str] = LOG_FILE):
    """Log to stderr (stdout carries command output), plus LOG_FILE when set"""
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def _mechanism(design: DesignVector, n: int, timing=None) -> Optional[SphericalFourBar]:
    try:
        mech, _ = decode(design, n, timing)
        return mech
    except MechanismError as e:
        logger.warning(f"Design does not describe a valid mechanism: {e}")
        return None


def print_report(report: EvaluationReport, mech: Optional[SphericalFourBar]):
    """Human-readable verification summary on stdout"""
    print(f"f_ob: {report.f_ob:.6e}")
    print(f"feasible: {report.feasible} ({report.infeasible_count} infeasible points)")
    if mech is not None:
        for k, alpha in enumerate(mech.link_lengths, start=1):
            print(f"alpha_{k}: {format_angle(alpha)}")
        print(f"grashof: {grashof_check(mech.link_lengths)}")
        print(f"crank_rotates: {crank_rotates(mech.link_lengths)}")
        print(f"theta_zero: {format_angle(mech.theta0)}")
        print(f"phi_zero: {format_angle(mech.phi0)}")
    print("point,squared_error,geodesic_error")
    for k, (e, d) in enumerate(zip(report.per_point_errors, report.geodesic_errors), start=1):
        print(f"{k},{e:.6e},{d:.6e}")


def cmd_synthesize(args) -> int:
    """Run DE on a problem file and write the result and convergence history"""
    problem = load_problem(args.problem)
    overrides = {
        'population_size': args.pop,
        'max_generations': args.gens,
        'cr': args.cr,
        'f_lo': args.f_lo,
        'f_hi': args.f_hi,
    }
    settings = {**problem.settings, **{k: v for k, v in overrides.items() if v is not None}}
    if args.seed is not None:
        problem.seed = args.seed
    if args.seeds is not None:
        problem.seeds = args.seeds
    if problem.seeds < 1:
        raise ValidationError(f"--seeds must be >= 1, got {problem.seeds}")

    try:
        outcome = synthesize(problem.path, problem.mode, problem.timing, problem.seed_list(),
                             settings, workers=args.workers)
    except ValueError as e:
        raise ValidationError(str(e)) from e

    report = structural_error(outcome.design, problem.path, problem.timing)
    mech = _mechanism(outcome.design, len(problem.path), problem.timing)
    store = ResultStore(args.out or problem.output_dir)
    result_path = store.save_result(problem.name, outcome.design, report, mech,
                                    seed=outcome.result.seed, runtime_seconds=outcome.result.runtime_seconds)
    store.save_history(problem.name, outcome.result)

    print(f"best seed: {outcome.result.seed}")
    print_report(report, mech)
    print(f"result: {result_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    """Evaluate a stored design against a problem's target points"""
    problem = load_problem(args.problem)
    design = load_design(args.design, n_points=len(problem.path))
    if design.n_points != len(problem.path):
        raise ValidationError(f"Design encodes {design.n_points} points, problem has {len(problem.path)}")
    if design.mode is not problem.mode:
        logger.warning(f"Design is {design.mode.value} but problem is {problem.mode.value}; using the design's mode")

    report = structural_error(design, problem.path, problem.timing)
    mech = _mechanism(design, len(problem.path), problem.timing)
    print_report(report, mech)
    if design.mode is SynthesisMode.FREE:
        _, mean = theta_differences(design.thetas)
        print(f"delta_theta_mean: {mean:.7f}")
    if args.out:
        ResultStore(args.out).save_result(Path(args.design).stem, design, report, mech)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_trace(args) -> int:
    """Sample the generated trajectory of a design's mechanism"""
    if args.samples < 1:
        raise ValidationError(f"--samples must be >= 1, got {args.samples}")
    # n only sets the timing, which tracing does not use
    design = load_design(args.design, n_points=1)
    mech = _mechanism(design, design.n_points)
    if mech is None:
        return EXIT_INFEASIBLE
    thetas, state = trace(mech, args.samples)
    frame = trace_frame(thetas, state)
    if args.out:
        ResultStore(args.out).save_trace(Path(args.design).stem, frame)
    else:
        frame.to_csv(sys.stdout, index=False, float_format='%.17g')
    infeasible = int((~frame['feasible']).sum())
    if infeasible:
        logger.warning(f"{infeasible} of {len(frame)} samples cannot be assembled")
    return EXIT_OK


def cmd_thetadiff(args) -> int:
    """Differences of consecutive input angles in a free-timing result"""
    design = load_design(args.design)
    if design.mode is not SynthesisMode.FREE:
        raise ValidationError("thetadiff needs a free-timing design or result")
    try:
        diffs, mean = theta_differences(design.thetas)
    except ValueError as e:
        raise ValidationError(str(e)) from e

    print("k,delta_theta")
    for k, d in enumerate(diffs, start=1):
        print(f"{k},{d:.7f}")
    spacing = 2.0 * math.pi / design.n_points
    print(f"mean: {mean:.7f}")
    print(f"mean_minus_uniform: {mean - spacing:.3e}")
    print(f"abs_mean_minus_uniform: {abs(mean - spacing):.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Spherical four-bar path synthesis with Differential Evolution')
    parser.add_argument('--log-level', default=LOG_LEVEL, help='Logging level (default from LOG_LEVEL)')
    commands = parser.add_subparsers(dest='command', required=True)

    synth = commands.add_parser('synthesize', help='Run DE on a problem file')
    synth.add_argument('--problem', required=True, help='Problem file')
    synth.add_argument('--seed', type=int, help='First RNG seed')
    synth.add_argument('--seeds', type=int, help='Number of consecutive seeds to run; the best is kept')
    synth.add_argument('--pop', type=int, help='Population size')
    synth.add_argument('--gens', type=int, help='Number of generations')
    synth.add_argument('--cr', type=float, help='Crossover probability')
    synth.add_argument('--f-lo', type=float, help='Lower end of the F dither range')
    synth.add_argument('--f-hi', type=float, help='Upper end of the F dither range (equal to --f-lo for fixed F)')
    synth.add_argument('--workers', type=int, default=DE_WORKERS, help='Process pool size for multiple seeds')
    synth.add_argument('--out', help='Output directory')
    synth.set_defaults(handler=cmd_synthesize)

    verify = commands.add_parser('verify', help='Evaluate a design against a problem')
    verify.add_argument('--design', required=True, help='Design or result file')
    verify.add_argument('--problem', required=True, help='Problem file')
    verify.add_argument('--out', help='Also write a result file to this directory')
    verify.set_defaults(handler=cmd_verify)

    tracer = commands.add_parser('trace', help='Export the generated trajectory as CSV')
    tracer.add_argument('--design', required=True, help='Design or result file')
    tracer.add_argument('--samples', type=int, default=360, help='Number of input angles over one turn')
    tracer.add_argument('--out', help='Output directory (default: CSV on stdout)')
    tracer.set_defaults(handler=cmd_trace)

    thetadiff = commands.add_parser('thetadiff', help='Input-angle differences of a free-timing result')
    thetadiff.add_argument('--design', required=True, help='Free-timing design or result file')
    thetadiff.set_defaults(handler=cmd_thetadiff)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    try:
        return args.handler(args)
    except ValidationError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_VALIDATION
    except SynthesisError as e:
        logger.error(f"Synthesis failed: {e}")
        return EXIT_VALIDATION
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
