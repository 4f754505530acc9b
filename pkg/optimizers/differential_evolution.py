"""
DE/rand/1/bin with dither, bound repair and ordered θ-blocks.

One generation: for every target x_i pick distinct r0, r1, r2 ≠ i, form
v = x_r0 + F (x_r1 - x_r2), cross it binomially with x_i, repair the trial
(wrap/reflect into bounds, sort the θ-block), then evaluate all trials and
keep each one that is no worse than its own target.

Random numbers are drawn in a fixed order (F, then per individual: donors,
crossover mask, j_rand) from a PCG64 generator, so a seed reproduces a run
exactly no matter how evaluations are spread over workers.
"""
import logging
import time
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import DE_CR, DE_F_HI, DE_F_LO, DE_MAX_GENERATIONS, DE_POPULATION_SIZE, DE_SEED
from objectives.base import BaseObjective
from objectives.design import BoundaryRule
from utils.exceptions import ValidationError
from utils.helpers import reflect_into, wrap_into

logger = logging.getLogger(__name__)


@dataclass
class Population:
    """Individuals of one generation with their fitness values"""
    generation: int
    individuals: np.ndarray  # (m, D)
    fitnesses: np.ndarray  # (m,)

    @property
    def size(self) -> int:
        return len(self.individuals)

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.fitnesses))

    @property
    def best_fitness(self) -> float:
        return float(self.fitnesses[self.best_index])

    @property
    def best(self) -> np.ndarray:
        return self.individuals[self.best_index].copy()


@dataclass
class DEConfig:
    """
    Settings for one DE run

    F is drawn uniformly from [f_lo, f_hi) once per generation (dither);
    set f_hi equal to f_lo, or None, for a fixed F.
    """
    lower: np.ndarray
    upper: np.ndarray
    rules: Sequence[BoundaryRule] = ()
    theta_block: slice = slice(0, 0)
    population_size: int = DE_POPULATION_SIZE
    max_generations: int = DE_MAX_GENERATIONS
    f_lo: float = DE_F_LO
    f_hi: Optional[float] = DE_F_HI
    cr: float = DE_CR
    seed: int = DE_SEED
    debug: bool = False
    log_every: int = 0  # 0 picks about ten progress lines per run
    audit: Optional[Callable[[Population], None]] = field(default=None, repr=False)

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if not self.rules:
            self.rules = (BoundaryRule.CLIP,) * len(self.lower)
        if self.lower.shape != self.upper.shape or len(self.rules) != len(self.lower):
            raise ValidationError("Bounds and boundary rules must all have one entry per coordinate")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValidationError("Bounds must be finite")
        if np.any(self.lower > self.upper):
            raise ValidationError("Every lower bound must be <= its upper bound")
        if self.population_size < 4:
            raise ValidationError(f"Population size must be at least 4, got {self.population_size}")
        if self.max_generations < 0:
            raise ValidationError(f"Generation count must be >= 0, got {self.max_generations}")
        if self.f_lo <= 0 or (self.f_hi is not None and self.f_hi < self.f_lo):
            raise ValidationError(f"Need 0 < F_lo <= F_hi, got [{self.f_lo}, {self.f_hi})")
        if not 0.0 <= self.cr <= 1.0:
            raise ValidationError(f"Cr must lie in [0, 1], got {self.cr}")

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def dither(self) -> bool:
        return self.f_hi is not None and self.f_hi > self.f_lo

    @classmethod
    def for_objective(cls, objective: BaseObjective, **settings) -> "DEConfig":
        """Config whose bounds, boundary rules and θ-block come from objective.bounds()"""
        bounds = objective.bounds()
        return cls(lower=bounds.lower, upper=bounds.upper, rules=bounds.rules,
                   theta_block=bounds.theta_block, **settings)


class HistoryRow(NamedTuple):
    generation: int
    best_f_ob: float
    mean_f_ob: float


@dataclass
class DEResult:
    best_values: np.ndarray
    best_fitness: float
    history: List[HistoryRow]
    seed: int
    runtime_seconds: float
    evaluations: int

    def history_frame(self) -> pd.DataFrame:
        """Convergence history with columns generation, best_f_ob, mean_f_ob"""
        return pd.DataFrame(self.history, columns=list(HistoryRow._fields))


def pick_donors(m: int, i: int, rng: np.random.Generator) -> Tuple[int, int, int]:
    """Three distinct indices in [0, m), all different from i"""
    others = rng.choice(m - 1, size=3, replace=False)
    others[others >= i] += 1
    return int(others[0]), int(others[1]), int(others[2])


def mutate(population: Population, i: int, f: float, rng: np.random.Generator,
           debug: bool = False) -> np.ndarray:
    """Donor vector v = x_r0 + F (x_r1 - x_r2)"""
    r0, r1, r2 = pick_donors(population.size, i, rng)
    if debug:
        logger.debug(f"gen {population.generation} target {i}: donors r0={r0} r1={r1} r2={r2}")
        assert len({i, r0, r1, r2}) == 4, f"Donor indices not distinct: {(i, r0, r1, r2)}"
    x = population.individuals
    return x[r0] + f * (x[r1] - x[r2])


def crossover(target: np.ndarray, donor: np.ndarray, cr: float, rng: np.random.Generator) -> np.ndarray:
    """
    Binomial crossover

    Each coordinate comes from the donor with probability Cr; coordinate
    j_rand always does.
    """
    if target.shape != donor.shape:
        raise ValueError(f"Target and donor shapes differ: {target.shape} vs {donor.shape}")
    take_donor = rng.random(target.size) <= cr
    take_donor[rng.integers(target.size)] = True
    return np.where(take_donor, donor, target)


def repair(trial: np.ndarray, config: DEConfig) -> np.ndarray:
    """
    Bring a trial vector back into the search domain

    Periodic coordinates wrap into [lower, upper), reflecting ones mirror at
    both ends, the rest are clipped. The θ-block is then sorted ascending so
    the input angles keep the order of the target points.
    """
    trial = np.asarray(trial, dtype=float)
    repaired = np.clip(trial, config.lower, config.upper)
    rules = np.array([r.value for r in config.rules])

    periodic = rules == BoundaryRule.PERIODIC.value
    repaired[periodic] = wrap_into(trial[periodic], config.lower[periodic], config.upper[periodic])
    reflect = rules == BoundaryRule.REFLECT.value
    repaired[reflect] = reflect_into(trial[reflect], config.lower[reflect], config.upper[reflect])

    block = config.theta_block
    if block.stop > block.start:
        repaired[block] = np.sort(repaired[block])
    return repaired


def select(target_fitness: float, trial_fitness: float) -> bool:
    """Keep the trial when it is no worse than its target (ties go to the trial)"""
    return trial_fitness <= target_fitness


class DifferentialEvolution:
    """
    DE/rand/1/bin minimizer

    Args:
        objective: Function to minimize
        config: Run settings, bounds included
        executor: Optional executor; when given, each generation's trials are
            evaluated in chunks through it
        workers: Number of chunks to split a generation into for the executor
    """
    def __init__(self, objective: BaseObjective, config: DEConfig,
                 executor: Optional[Executor] = None, workers: int = 1):
        self.objective = objective
        self.config = config
        self.executor = executor
        self.workers = max(1, workers)
        self.rng = np.random.Generator(np.random.PCG64(config.seed))
        self.evaluations = 0

    def evaluate(self, vectors: np.ndarray) -> np.ndarray:
        """Fitness of a stack of vectors"""
        self.evaluations += len(vectors)
        if self.executor is None or self.workers == 1:
            return np.asarray(self.objective.evaluate_batch(vectors), dtype=float)
        chunks = np.array_split(vectors, self.workers)
        results = self.executor.map(self.objective.evaluate_batch, chunks)
        return np.concatenate([np.asarray(r, dtype=float) for r in results])

    def initialize(self) -> Population:
        """
        Uniform random population inside the bounds, repaired and evaluated

        Returns:
            Generation-0 population
        """
        config = self.config
        m, d = config.population_size, config.dimension
        raw = self.rng.random((m, d)) * (config.upper - config.lower) + config.lower
        individuals = np.array([repair(x, config) for x in raw])
        return Population(generation=0, individuals=individuals, fitnesses=self.evaluate(individuals))

    def draw_f(self) -> float:
        if self.config.dither:
            return float(self.rng.uniform(self.config.f_lo, self.config.f_hi))
        return float(self.config.f_lo)

    def step(self, population: Population) -> Population:
        """Advance one generation"""
        config = self.config
        f = self.draw_f()
        trials = np.empty_like(population.individuals)
        for i in range(population.size):
            donor = mutate(population, i, f, self.rng, debug=config.debug)
            trial = crossover(population.individuals[i], donor, config.cr, self.rng)
            trials[i] = repair(trial, config)

        trial_fitnesses = self.evaluate(trials)
        keep = np.array([select(t, u) for t, u in zip(population.fitnesses, trial_fitnesses)])
        return Population(
            generation=population.generation + 1,
            individuals=np.where(keep[:, np.newaxis], trials, population.individuals),
            fitnesses=np.where(keep, trial_fitnesses, population.fitnesses),
        )

    def run(self) -> DEResult:
        """
        Run max_generations generations

        Returns:
            DEResult with the best vector, its fitness and the per-generation history
        """
        config = self.config
        start = time.perf_counter()
        log_every = config.log_every or max(1, config.max_generations // 10)
        logger.info(f"Starting DE: D={config.dimension}, m={config.population_size}, "
                    f"g_max={config.max_generations}, seed={config.seed}")

        population = self.initialize()
        history = [self._record(population)]
        if config.audit:
            config.audit(population)

        for _ in range(config.max_generations):
            population = self.step(population)
            history.append(self._record(population))
            if config.audit:
                config.audit(population)
            if population.generation % log_every == 0:
                logger.info(f"Generation {population.generation}: best f_ob = {population.best_fitness:.6e}")

        runtime = time.perf_counter() - start
        logger.info(f"DE finished in {runtime:.1f}s: best f_ob = {population.best_fitness:.6e}")
        return DEResult(
            best_values=population.best,
            best_fitness=population.best_fitness,
            history=history,
            seed=config.seed,
            runtime_seconds=runtime,
            evaluations=self.evaluations,
        )

    @staticmethod
    def _record(population: Population) -> HistoryRow:
        return HistoryRow(population.generation, population.best_fitness, float(np.mean(population.fitnesses)))
