"""Hypervolume and convergence tracking (minimization convention)."""

import logging
from typing import Sequence

import numpy as np
from pymoo.indicators.hv import HV

logger = logging.getLogger(__name__)

REFERENCE_SCALE = 1.1


def _usable(points, ref) -> tuple[np.ndarray, np.ndarray, int]:
    ref = np.asarray(ref, dtype=float)
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return np.empty((0, ref.size)), ref, 0
    points = np.atleast_2d(points)
    inside = np.all(points <= ref, axis=1)
    return points[inside], ref, int(np.count_nonzero(~inside))


def hypervolume(points, ref) -> float:
    """Volume dominated by ``points`` inside the box bounded by ``ref``.

    Points not componentwise <= ref are dropped (the count is logged).
    """
    usable, ref, dropped = _usable(points, ref)
    if dropped:
        logger.debug("Dropped %d point(s) outside the reference box", dropped)
    if len(usable) == 0:
        return 0.0
    return float(HV(ref_point=ref)(usable))


def hypervolume_monte_carlo(points, ref, samples: int = 10_000_000, seed: int = 0, chunk: int = 250_000) -> float:
    """Uniform sampling estimate over the box [min(points), ref]."""
    usable, ref, _ = _usable(points, ref)
    if len(usable) == 0:
        return 0.0
    low = usable.min(axis=0)
    box = float(np.prod(ref - low))
    if box == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        draws = rng.uniform(low, ref, size=(size, ref.size))
        dominated = np.zeros(size, dtype=bool)
        for p in usable:
            dominated |= np.all(draws >= p, axis=1)
        hits += int(np.count_nonzero(dominated))
        done += size
    return box * hits / samples


def union_bounds(fronts: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    stacked = np.vstack([np.atleast_2d(f) for f in fronts if len(f)])
    return stacked.min(axis=0), stacked.max(axis=0)


def normalize_front(front: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    span = np.where(high > low, high - low, 1.0)
    return (np.asarray(front, dtype=float) - low) / span


def normalized_hv_series(histories: dict) -> tuple[dict, np.ndarray]:
    """Per-generation HV of every run on a common scale.

    Objectives are normalized to [0, 1] with the min/max over the union of
    every run's final archive; the reference point is 1.1 in each objective.
    Returns the series per run and the reference point.
    """
    finals = [history[-1] for history in histories.values() if history and len(history[-1])]
    if not finals:
        return {name: [0.0] * len(history) for name, history in histories.items()}, np.array([])
    low, high = union_bounds(finals)
    ref = np.full(low.size, REFERENCE_SCALE)
    series = {
        name: [hypervolume(normalize_front(front, low, high), ref) if len(front) else 0.0 for front in history]
        for name, history in histories.items()
    }
    return series, ref


def track_convergence(hv_series: Sequence[float], window: int = 10, epsilon: float = 1e-6) -> int | None:
    """First generation g with max - min of the series over [g, g + window) below epsilon."""
    values = np.asarray(hv_series, dtype=float)
    if values.size == 0:
        raise ValueError("hv_series must not be empty")
    window = min(max(1, window), values.size)
    for g in range(values.size - window + 1):
        chunk = values[g:g + window]
        if chunk.max() - chunk.min() < epsilon:
            return g
    return None
