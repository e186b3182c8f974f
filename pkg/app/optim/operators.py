"""Classical variation operators for bounded real vectors.

Each variation operator takes the parent matrix, the parents' objective
values and a ``numpy.random.Generator`` and returns one child. The
generator is passed per call so every subproblem can draw from its own
stream.
"""

from collections.abc import Callable
from typing import Protocol

import numpy as np

Bounds = tuple[np.ndarray, np.ndarray]


class VariationOperator(Protocol):
    name: str
    n_parents: int

    def __call__(self, parents: np.ndarray, values: np.ndarray, rng: np.random.Generator) -> np.ndarray: ...


def _as_bounds(bounds, n_vars: int) -> Bounds:
    lower, upper = bounds
    return np.broadcast_to(np.asarray(lower, float), (n_vars,)), np.broadcast_to(np.asarray(upper, float), (n_vars,))


def sbx_crossover(eta: float = 20.0, bounds=(0.0, 1.0)) -> Callable[[np.ndarray, np.ndarray, np.random.Generator], np.ndarray]:
    """Simulated binary crossover returning one of the two symmetric children per variable.

    Args:
        eta: Distribution index. Higher values keep children closer to the parents.
        bounds: Lower and upper bounds, scalars or per-variable arrays. Children are clipped.
    """

    def crossover(p1: np.ndarray, p2: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n_vars = len(p1)
        lower, upper = _as_bounds(bounds, n_vars)
        child = np.empty(n_vars, dtype=np.float64)
        for i in range(n_vars):
            u = rng.random()
            beta = (2.0 * u) ** (1.0 / (eta + 1.0)) if u <= 0.5 else (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0))
            c1 = 0.5 * ((1.0 + beta) * p1[i] + (1.0 - beta) * p2[i])
            c2 = 0.5 * ((1.0 - beta) * p1[i] + (1.0 + beta) * p2[i])
            child[i] = c1 if rng.random() < 0.5 else c2
        return np.clip(child, lower, upper)

    return crossover


def polynomial_mutation(
    eta: float = 20.0,
    prob: float | None = None,
    bounds=(0.0, 1.0),
) -> Callable[[np.ndarray, np.random.Generator], np.ndarray]:
    """Bounded polynomial mutation; ``prob`` defaults to 1 / n_vars."""

    def mutate(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n_vars = len(x)
        lower, upper = _as_bounds(bounds, n_vars)
        mutation_prob = prob if prob is not None else 1.0 / n_vars
        mutated = np.array(x, dtype=np.float64)
        for i in range(n_vars):
            if rng.random() >= mutation_prob:
                continue
            span = upper[i] - lower[i]
            if span <= 0:
                continue
            delta_l = (mutated[i] - lower[i]) / span
            delta_r = (upper[i] - mutated[i]) / span
            u = rng.random()
            if u < 0.5:
                xy = 1.0 - delta_l
                val = 2.0 * u + (1.0 - 2.0 * u) * (xy ** (eta + 1.0))
                delta_q = val ** (1.0 / (eta + 1.0)) - 1.0
            else:
                xy = 1.0 - delta_r
                val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (xy ** (eta + 1.0))
                delta_q = 1.0 - val ** (1.0 / (eta + 1.0))
            mutated[i] = mutated[i] + delta_q * span
        return np.clip(mutated, lower, upper)

    return mutate


def de_rand_1_bin(scale: float = 0.5, crossover_rate: float = 0.9, bounds=(0.0, 1.0)):
    """DE/rand/1/bin: base + F (a - b), binomially mixed back into the base vector."""

    def crossover(base: np.ndarray, a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n_vars = len(base)
        lower, upper = _as_bounds(bounds, n_vars)
        mutant = base + scale * (a - b)
        mask = rng.random(n_vars) < crossover_rate
        mask[rng.integers(n_vars)] = True
        child = np.where(mask, mutant, base)
        return np.clip(child, lower, upper)

    return crossover


class SbxOperator:
    name = "sbx"
    n_parents = 2

    def __init__(self, bounds, eta: float = 20.0, mutation_eta: float = 20.0):
        self.bounds = bounds
        self._crossover = sbx_crossover(eta, bounds)
        self._mutate = polynomial_mutation(mutation_eta, bounds=bounds)

    def __call__(self, parents: np.ndarray, values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        child = self._crossover(parents[0], parents[1], rng)
        return self._mutate(child, rng)


class DeOperator:
    name = "de"
    n_parents = 3

    def __init__(self, bounds, scale: float = 0.5, crossover_rate: float = 0.9, mutation_eta: float = 20.0):
        self.bounds = bounds
        self._crossover = de_rand_1_bin(scale, crossover_rate, bounds)
        self._mutate = polynomial_mutation(mutation_eta, bounds=bounds)

    def __call__(self, parents: np.ndarray, values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        child = self._crossover(parents[0], parents[1], parents[2], rng)
        return self._mutate(child, rng)
