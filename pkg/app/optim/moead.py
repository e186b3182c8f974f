"""Decomposition-based multi-objective optimization of the selection windows.

Objectives are F_K1..F_KN (per-vehicle fairness deviations) followed by
F_age (network average AoI), all minimized. Each generation produces one
offspring per subproblem from the population as it stood when the
generation started; ideal-point update, archive insertion and neighborhood
replacement are then applied in subproblem-index order. Every subproblem
draws from its own random stream keyed by (seed, generation, index), so a
run is reproducible for any worker count.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from pymoo.util.ref_dirs import get_reference_directions

from ..core.errors import FairlineError, ParameterInconsistencyError
from ..models import aoi, fairness
from ..models.models import ParetoArchive
from ..schemas.schemas import OptimizerConfig, Scenario
from .operators import VariationOperator

logger = logging.getLogger(__name__)

INFEASIBLE_SENTINEL = 1e12

GenerationCallback = Callable[[int, ParetoArchive, np.ndarray, np.ndarray], None]


def das_dennis_weights(num_objectives: int, partitions: int) -> np.ndarray:
    """Simplex-lattice weights in lexicographic order, C(n_p + M - 1, M - 1) rows."""
    if num_objectives < 2:
        raise ParameterInconsistencyError("at least two objectives are required")
    if partitions < 1:
        raise ParameterInconsistencyError("partitions must be at least 1")
    W = get_reference_directions("das-dennis", num_objectives, n_partitions=partitions)
    # snap to the exact lattice k / n_p
    W = np.round(W * partitions) / partitions
    order = np.lexsort(W.T[::-1])
    return W[order]


def build_neighborhoods(weights: np.ndarray, size: int) -> list[np.ndarray]:
    """The ``size`` most cosine-similar weight vectors of each vector, itself first."""
    n = len(weights)
    if not 1 <= size <= n:
        raise ParameterInconsistencyError(f"neighborhood size must lie within [1, {n}]")
    norms = np.linalg.norm(weights, axis=1)
    if np.any(norms == 0):
        raise ParameterInconsistencyError("zero-norm weight vector")
    unit = weights / norms[:, None]
    cosine = np.round(unit @ unit.T, 12)
    index = np.arange(n)
    neighborhoods = []
    for i in range(n):
        order = np.lexsort((index, -cosine[i]))
        rest = order[order != i][: size - 1]
        neighborhoods.append(np.concatenate(([i], rest)).astype(int))
    return neighborhoods


def tchebycheff(f: np.ndarray, weight: np.ndarray, ideal: np.ndarray) -> float:
    return float(np.max(weight * np.abs(np.asarray(f) - ideal)))


def update_neighborhood(
    child: np.ndarray,
    f: np.ndarray,
    neighborhood: np.ndarray,
    population: np.ndarray,
    objectives: np.ndarray,
    weights: np.ndarray,
    ideal: np.ndarray,
) -> list[int]:
    """Replace, in place, every neighbor whose Tchebycheff value ``f`` strictly lowers.

    Returns the replaced subproblem indices. Nothing is replaced while the
    ideal point is not finite.
    """
    if not np.all(np.isfinite(ideal)):
        return []
    replaced = []
    for j in neighborhood:
        if tchebycheff(f, weights[j], ideal) < tchebycheff(objectives[j], weights[j], ideal):
            population[j] = child
            objectives[j] = f
            replaced.append(int(j))
    return replaced


def evaluate_objectives(windows: Sequence[float], scenario: Scenario) -> np.ndarray:
    report = fairness.fairness_report(windows, scenario)
    rates = aoi.build_rates(windows, scenario)
    return np.append(report.per_vehicle_deviation, aoi.network_aoi(rates))


def _evaluate_safe(windows: np.ndarray, scenario: Scenario) -> tuple[np.ndarray, bool]:
    try:
        return evaluate_objectives(windows, scenario), True
    except FairlineError as exc:
        logger.debug("Infeasible evaluation at %s: %s", np.round(windows, 3), exc)
        return np.full(scenario.num_objectives, INFEASIBLE_SENTINEL), False


def subproblem_rng(seed: int, generation: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, generation, index]))


def _select_parents(
    i: int,
    neighborhoods: list[np.ndarray],
    population_size: int,
    n_parents: int,
    neighbor_prob: float,
    rng: np.random.Generator,
) -> np.ndarray:
    if rng.random() < neighbor_prob:
        pool = neighborhoods[i]
    else:
        pool = np.arange(population_size)
    return rng.choice(pool, size=n_parents, replace=len(pool) < n_parents)


def evolve(
    scenario: Scenario,
    config: OptimizerConfig,
    operator: VariationOperator,
    on_generation: GenerationCallback | None = None,
) -> ParetoArchive:
    """Run the optimizer and return the archive of nondominated evaluated solutions.

    ``on_generation(gen, archive, population, objectives)`` is called after
    initialization (gen 0) and after every generation.
    """
    started = time.perf_counter()
    n_vars = scenario.num_vehicles
    n_obj = scenario.num_objectives
    lower, upper = scenario.config.window_bounds
    weights = das_dennis_weights(n_obj, config.partitions)
    pop_size = len(weights)
    neighborhood_size = config.neighborhood_size
    if neighborhood_size > pop_size:
        logger.info("Neighborhood size %d reduced to the population size %d", neighborhood_size, pop_size)
        neighborhood_size = pop_size
    neighborhoods = build_neighborhoods(weights, neighborhood_size)

    archive = ParetoArchive(num_objectives=n_obj)
    init_rng = np.random.default_rng(np.random.SeedSequence([config.rng_seed]))
    population = init_rng.uniform(lower, upper, size=(pop_size, n_vars))

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        evaluated = list(pool.map(lambda w: _evaluate_safe(w, scenario), population))
        objectives = np.vstack([f for f, _ in evaluated])
        for w, (f, feasible) in zip(population, evaluated):
            archive.evaluations += 1
            if feasible:
                archive.update_ideal(f)
                archive.add(w, f)
        if not any(feasible for _, feasible in evaluated):
            logger.warning(
                "No feasible solution among %d initial candidates; replacements wait for a feasible offspring",
                pop_size,
            )
        archive.snapshot()
        if on_generation is not None:
            on_generation(0, archive, population.copy(), objectives.copy())

        for gen in range(1, config.generations + 1):
            parents_pop = population.copy()
            parents_obj = objectives.copy()

            def make_offspring(i: int) -> tuple[np.ndarray, np.ndarray, bool]:
                rng = subproblem_rng(config.rng_seed, gen, i)
                idx = _select_parents(i, neighborhoods, pop_size, operator.n_parents, config.neighbor_prob, rng)
                child = operator(parents_pop[idx], parents_obj[idx], rng)
                child = np.clip(np.asarray(child, dtype=float), lower, upper)
                f, feasible = _evaluate_safe(child, scenario)
                return child, f, feasible

            offspring = list(pool.map(make_offspring, range(pop_size)))

            for i, (child, f, feasible) in enumerate(offspring):
                archive.evaluations += 1
                if not feasible:
                    continue
                archive.update_ideal(f)
                archive.add(child, f)
                replaced = update_neighborhood(
                    child, f, neighborhoods[i], population, objectives, weights, archive.ideal_point
                )
                archive.replacements += len(replaced)

            archive.snapshot()
            if on_generation is not None:
                on_generation(gen, archive, population.copy(), objectives.copy())
            logger.debug("Generation %d: archive size %d", gen, len(archive))

    archive.elapsed_s = time.perf_counter() - started
    logger.info(
        "%s run finished: %d generations, %d evaluations, archive size %d, %.2fs",
        operator.name, config.generations, archive.evaluations, len(archive), archive.elapsed_s,
    )
    return archive


def k_bound(deviations: Sequence[float]) -> float:
    """Smallest of the largest 10% of the max-deviation values."""
    values = sorted(float(v) for v in deviations)
    n = len(values)
    if n == 0:
        raise ParameterInconsistencyError("k_bound needs at least one solution")
    j = (9 * n + 9) // 10  # ceil(0.9 n), 1-based
    return values[j - 1]


def select_solution(archive: ParetoArchive, scenario: Scenario | None = None) -> tuple[np.ndarray, int]:
    """Return (windows, archive index) of the min-F_age solution with every F_Ki <= K_bound.

    Falls back to the solution with the smallest max deviation when none qualifies.
    """
    F = archive.objective_matrix()
    if len(F) == 0:
        raise ParameterInconsistencyError("cannot select from an empty archive")
    max_dev = F[:, :-1].max(axis=1)
    bound = k_bound(max_dev)
    qualified = np.flatnonzero(max_dev <= bound)
    if qualified.size:
        best = int(qualified[np.argmin(F[qualified, -1])])
    else:
        best = int(np.argmin(max_dev))
    return archive.windows[best].copy(), best
