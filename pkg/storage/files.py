"""
Problem, design and result files.

Problem, design and result files are KEY=VALUE text parsed with
python-dotenv; points, convergence histories and traces are CSV handled
with pandas.
"""
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values

from config import DE_SEED, OUTPUT_DIR
from mechanism.four_bar import SphericalFourBar, grashof_check
from objectives.design import DesignVector, SynthesisMode, TargetPath, Timing, design_labels
from objectives.structural import EvaluationReport
from optimizers.differential_evolution import DEResult
from utils.exceptions import ValidationError
from utils.helpers import clean_filename, format_float_list, parse_float_list

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

POINT_COLUMNS = ['x', 'y', 'z']
TRACE_COLUMNS = ['theta', 'gen_x', 'gen_y', 'gen_z', 'r2_x', 'r2_y', 'r2_z', 'r3_x', 'r3_y', 'r3_z', 'feasible']

# Problem-file keys mapped onto DEConfig fields
_DE_KEYS = {
    'POPULATION_SIZE': ('population_size', int),
    'MAX_GENERATIONS': ('max_generations', int),
    'CR': ('cr', float),
    'F_LO': ('f_lo', float),
    'F_HI': ('f_hi', float),
}


@dataclass
class ProblemFile:
    """A parsed synthesis problem"""
    name: str
    mode: SynthesisMode
    path: TargetPath
    timing: Optional[Timing]
    settings: Dict = field(default_factory=dict)
    seed: int = DE_SEED
    seeds: int = 1
    output_dir: Path = OUTPUT_DIR

    def seed_list(self) -> List[int]:
        return list(range(self.seed, self.seed + self.seeds))


def read_key_values(path: PathLike) -> Dict[str, str]:
    """Parse a KEY=VALUE file, raising ValidationError if it is missing"""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"File not found: {path}")
    return {k.upper(): v for k, v in dotenv_values(path).items() if v is not None}


def _number(values: Dict[str, str], key: str, cast=float, default=None):
    raw = values.get(key)
    if raw is None or raw.strip() == '':
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ValidationError(f"{key} must be a number, got '{raw}'")


def _float_list(values: Dict[str, str], key: str) -> List[float]:
    try:
        return parse_float_list(values.get(key, ''))
    except ValueError:
        raise ValidationError(f"{key} must be a list of numbers, got '{values.get(key)}'")


def load_points(path: PathLike) -> TargetPath:
    """
    Read target points from a CSV with columns x, y, z

    Raises:
        ValidationError: If the file is missing, empty, or not on the unit sphere
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"Points file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise ValidationError(f"Points file is empty: {path}")
    missing = [c for c in POINT_COLUMNS if c not in frame.columns]
    if missing:
        raise ValidationError(f"Points file {path} lacks columns {missing}")
    if frame.empty:
        raise ValidationError(f"Points file has no rows: {path}")
    return TargetPath(frame[POINT_COLUMNS].to_numpy(dtype=float))


def _timing(values: Dict[str, str], n: int) -> Timing:
    theta1 = _number(values, 'THETA1')
    kind = values.get('TIMING', 'uniform').strip().lower()
    if kind == 'uniform':
        return Timing.uniform(n, theta1)
    if kind == 'spacing':
        spacing = _number(values, 'THETA_SPACING')
        if spacing is None:
            raise ValidationError("TIMING=spacing needs THETA_SPACING")
        return Timing.spaced(n, spacing, theta1)
    if kind == 'explicit':
        thetas = _float_list(values, 'THETAS')
        if len(thetas) != n:
            raise ValidationError(f"THETAS lists {len(thetas)} angles for {n} points")
        return replace(Timing.explicit(thetas), fixed_theta1=theta1)
    raise ValidationError(f"Unknown TIMING '{kind}' (expected uniform, spacing or explicit)")


def load_problem(path: PathLike) -> ProblemFile:
    """
    Parse a problem file

    POINTS is resolved relative to the problem file. POINT_STRIDE keeps every
    k-th point before timing is built.

    Args:
        path: Problem file

    Returns:
        ProblemFile

    Raises:
        ValidationError: On any missing or malformed entry
    """
    path = Path(path)
    values = read_key_values(path)

    mode = SynthesisMode.parse(values.get('MODE', 'prescribed'))
    if 'POINTS' not in values:
        raise ValidationError(f"Problem file {path} has no POINTS entry")
    points_path = Path(values['POINTS'])
    if not points_path.is_absolute():
        points_path = path.parent / points_path
    target = load_points(points_path)

    stride = _number(values, 'POINT_STRIDE', int, 1)
    if stride < 1:
        raise ValidationError(f"POINT_STRIDE must be >= 1, got {stride}")
    if stride > 1:
        target = target.subsample(stride)
        logger.info(f"Kept every {stride}th point: {len(target)} of the listed points remain")

    timing = None
    if mode is SynthesisMode.PRESCRIBED:
        timing = _timing(values, len(target))
    elif any(k in values for k in ('TIMING', 'THETA_SPACING', 'THETAS', 'THETA1')):
        logger.warning(f"Timing entries in {path.name} are ignored in free mode")

    settings = {}
    for key, (name, cast) in _DE_KEYS.items():
        value = _number(values, key, cast)
        if value is not None:
            settings[name] = value

    output_dir = Path(values['OUTPUT_DIR']) if values.get('OUTPUT_DIR') else OUTPUT_DIR
    if not output_dir.is_absolute() and values.get('OUTPUT_DIR'):
        output_dir = path.parent / output_dir

    return ProblemFile(
        name=values.get('NAME') or path.stem,
        mode=mode,
        path=target,
        timing=timing,
        settings=settings,
        seed=_number(values, 'SEED', int, DE_SEED),
        seeds=_number(values, 'SEEDS', int, 1),
        output_dir=output_dir,
    )


def load_design(path: PathLike, n_points: Optional[int] = None) -> DesignVector:
    """
    Parse a design (or result) file into a DesignVector

    Free-mode vectors take n from their THETA_k entries; prescribed ones
    from N_POINTS, falling back to the n_points argument.

    Raises:
        ValidationError: If the mode, entries or point count do not fit together
    """
    values = read_key_values(path)
    mode = SynthesisMode.parse(values.get('MODE', 'prescribed'))
    stored_n = _number(values, 'N_POINTS', int)

    theta_keys = sorted((k for k in values if re.fullmatch(r'THETA_\d+', k)), key=lambda k: int(k[6:]))
    if mode is SynthesisMode.FREE:
        n = len(theta_keys)
        if stored_n is not None and stored_n != n:
            raise ValidationError(f"N_POINTS={stored_n} but {n} THETA_k entries in {path}")
    else:
        n = stored_n or n_points
        if n is None:
            raise ValidationError(f"Prescribed design {path} needs N_POINTS")
        if theta_keys != ['THETA_1']:
            raise ValidationError(f"Prescribed design {path} must hold exactly THETA_1, got {theta_keys}")

    labels = design_labels(mode, n)
    missing = [label for label in labels if label not in values]
    if missing:
        raise ValidationError(f"Design {path} lacks {missing}")
    return DesignVector(mode=mode, values=np.array([_number(values, k) for k in labels]), n_points=n)


class ResultStore:
    """
    Writes result, history and trace files under one output directory

    Args:
        output_dir: Target directory, created on first write
    """
    def __init__(self, output_dir: PathLike = OUTPUT_DIR):
        self.output_dir = Path(output_dir)

    def _file(self, name: str, suffix: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / f"{clean_filename(name)}{suffix}"

    def save_result(self, name: str, design: DesignVector, report: EvaluationReport,
                    mech: Optional[SphericalFourBar], seed: Optional[int] = None,
                    runtime_seconds: Optional[float] = None) -> Path:
        """
        Write a result file; it is also a valid design file

        Floats are written with repr() so re-reading reproduces them exactly.
        """
        lines = [f"MODE={design.mode.value}", f"N_POINTS={design.n_points}"]
        lines += [f"{label}={float(v)!r}" for label, v in zip(design.labels(), design.values)]
        lines.append(f"F_OB={report.f_ob!r}")
        if mech is not None:
            lines += [f"ALPHA_{k}={a!r}" for k, a in enumerate(mech.link_lengths, start=1)]
            lines.append(f"GRASHOF={str(grashof_check(mech.link_lengths)).lower()}")
            lines.append(f"THETA_ZERO={mech.theta0!r}")
            lines.append(f"PHI_ZERO={mech.phi0!r}")
        lines.append(f"GEODESIC_ERRORS={format_float_list(report.geodesic_errors)}")
        if seed is not None:
            lines.append(f"SEED={seed}")
        if runtime_seconds is not None:
            lines.append(f"RUNTIME_SECONDS={runtime_seconds:.3f}")

        path = self._file(name, '_result.env')
        path.write_text("\n".join(lines) + "\n")
        logger.info(f"Wrote result to {path}")
        return path

    @staticmethod
    def load_result(path: PathLike) -> Dict:
        """
        Read a result file

        Returns:
            Dict with 'design' (DesignVector), 'f_ob' and, when present,
            'link_lengths', 'grashof', 'theta0', 'phi0', 'geodesic_errors',
            'seed' and 'runtime_seconds'
        """
        values = read_key_values(path)
        result = {'design': load_design(path), 'f_ob': _number(values, 'F_OB', default=math.nan)}
        if 'ALPHA_1' in values:
            result['link_lengths'] = tuple(_number(values, f"ALPHA_{k}") for k in range(1, 5))
            result['grashof'] = values.get('GRASHOF', '').lower() == 'true'
            result['theta0'] = _number(values, 'THETA_ZERO')
            result['phi0'] = _number(values, 'PHI_ZERO')
        if 'GEODESIC_ERRORS' in values:
            result['geodesic_errors'] = _float_list(values, 'GEODESIC_ERRORS')
        if 'SEED' in values:
            result['seed'] = _number(values, 'SEED', int)
        if 'RUNTIME_SECONDS' in values:
            result['runtime_seconds'] = _number(values, 'RUNTIME_SECONDS')
        return result

    def save_history(self, name: str, result: DEResult) -> Path:
        """Convergence history CSV: generation, best_f_ob, mean_f_ob"""
        path = self._file(name, '_history.csv')
        result.history_frame().to_csv(path, index=False, float_format='%.17g')
        logger.info(f"Wrote {len(result.history)} history rows to {path}")
        return path

    def save_trace(self, name: str, frame: pd.DataFrame) -> Path:
        """Trajectory CSV with TRACE_COLUMNS"""
        path = self._file(name, '_trace.csv')
        frame[TRACE_COLUMNS].to_csv(path, index=False, float_format='%.17g')
        logger.info(f"Wrote {len(frame)} trace samples to {path}")
        return path


def trace_frame(thetas: np.ndarray, state) -> pd.DataFrame:
    """Trace table for one mechanism from mechanism.four_bar.trace() output"""
    frame = pd.DataFrame({'theta': thetas})
    for prefix, points in (('gen', state.r_gen[0]), ('r2', state.r2[0]), ('r3', state.r3[0])):
        for k, axis in enumerate('xyz'):
            frame[f"{prefix}_{axis}"] = points[:, k]
    frame['feasible'] = state.feasible[0]
    return frame
