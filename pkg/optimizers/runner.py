import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from config import DE_WORKERS
from objectives.design import DesignVector, SynthesisMode, TargetPath, Timing
from objectives.structural import StructuralErrorObjective
from optimizers.differential_evolution import DEConfig, DEResult, DifferentialEvolution

logger = logging.getLogger(__name__)


@dataclass
class SynthesisOutcome:
    """Best design over all seeds plus every per-seed result"""
    design: DesignVector
    result: DEResult
    runs: List[DEResult]

    @property
    def f_ob(self) -> float:
        return self.result.best_fitness


def synthesize_seed(path: TargetPath, mode: SynthesisMode, timing: Optional[Timing],
                    settings: Dict, seed: int) -> Tuple[DesignVector, DEResult]:
    """
    One DE run for a single seed

    Args:
        path: Target points
        mode: Prescribed or free timing
        timing: Prescribed timing (None for uniform)
        settings: DEConfig keyword overrides (population_size, max_generations, cr, ...)
        seed: RNG seed for this run

    Returns:
        Tuple (best design vector, DEResult)
    """
    objective = StructuralErrorObjective(path, mode, timing)
    config = DEConfig.for_objective(objective, **{**settings, 'seed': seed})
    result = DifferentialEvolution(objective, config).run()
    design = DesignVector(mode=mode, values=result.best_values, n_points=len(path))
    logger.info(f"Seed {seed}: f_ob = {result.best_fitness:.6e} in {result.runtime_seconds:.1f}s")
    return design, result


def synthesize(path: TargetPath, mode: SynthesisMode, timing: Optional[Timing],
               seeds: Sequence[int], settings: Optional[Dict] = None,
               workers: int = DE_WORKERS) -> SynthesisOutcome:
    """
    Run one DE per seed and keep the best

    Seeds fan out to a process pool when workers > 1; every run owns its RNG,
    so the outcome does not depend on the worker count.

    Args:
        path: Target points
        mode: Prescribed or free timing
        timing: Prescribed timing (None for uniform)
        seeds: Seeds to run
        settings: DEConfig keyword overrides
        workers: Process pool size

    Returns:
        SynthesisOutcome; ties between seeds go to the earlier seed
    """
    settings = dict(settings or {})
    seeds = list(seeds)
    if not seeds:
        raise ValueError("At least one seed is required")
    logger.info(f"Synthesizing {mode.value} problem with {len(path)} points over seeds {seeds}")

    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(seeds))) as executor:
            futures = [executor.submit(synthesize_seed, path, mode, timing, settings, s) for s in seeds]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [synthesize_seed(path, mode, timing, settings, s) for s in seeds]

    best_design, best_result = min(outcomes, key=lambda o: o[1].best_fitness)
    logger.info(f"Best seed {best_result.seed}: f_ob = {best_result.best_fitness:.6e}")
    return SynthesisOutcome(design=best_design, result=best_result, runs=[r for _, r in outcomes])
