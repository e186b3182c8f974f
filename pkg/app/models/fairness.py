"""SPS collision and half-duplex probabilities, PRR and the fairness index."""

import logging
import warnings
from typing import Sequence

import numpy as np

from ..core.errors import ModelValidityWarning, ParameterInconsistencyError
from ..schemas.schemas import Scenario, ScenarioConfig
from . import channel
from .models import FairnessReport

logger = logging.getLogger(__name__)

SLOTS_PER_SECOND = 1000


def dwell_time(coverage: float, v: float) -> float:
    """Seconds spent inside RSU coverage, T_i = R / v."""
    if v <= 0:
        raise ParameterInconsistencyError(f"speed must be positive, got {v}")
    return coverage / v


def frame_slots(numerology: int, rri: float) -> float:
    return SLOTS_PER_SECOND * 2.0 ** numerology * rri


def overlap_probability(w_i: float, w_j: float, numerology: int, rri: float) -> float:
    p = (w_i + w_j + 1.0) / frame_slots(numerology, rri)
    if p > 1.0:
        raise ParameterInconsistencyError(
            f"overlap probability {p:g} exceeds 1 for windows ({w_i:g}, {w_j:g}) ms"
        )
    return p


def shared_resources(w_i: float, w_j: float) -> float:
    return (w_i + 1.0) * (w_j + 1.0) / (w_i + w_j + 1.0)


def shared_selection_prob(num_subchannels: float, n_shared: float, total_resources: float) -> float:
    p = (num_subchannels * n_shared / total_resources) ** 2
    if p > 1.0:
        warnings.warn(
            f"shared-selection probability {p:.4g} exceeds 1 and was clamped "
            f"(N_Sc={num_subchannels:g}, N_Sh={n_shared:.4g}, N_r={total_resources:g})",
            ModelValidityWarning,
            stacklevel=2,
        )
        return 1.0
    return p


def collision_probability(w_i: float, w_j: float, config: ScenarioConfig) -> float:
    p_overlap = overlap_probability(w_i, w_j, config.numerology, config.rri)
    p_shared = shared_selection_prob(
        config.num_subchannels, shared_resources(w_i, w_j), config.total_resources
    )
    return p_overlap * p_shared * config.common_candidates / config.avg_candidates ** 2


def half_duplex_probability(packet_rate: float) -> float:
    if packet_rate < 0:
        raise ParameterInconsistencyError("packet_rate must be non-negative")
    if packet_rate > SLOTS_PER_SECOND:
        raise ParameterInconsistencyError(
            f"packet_rate {packet_rate:g} exceeds {SLOTS_PER_SECOND} packets/s (half-duplex probability > 1)"
        )
    return packet_rate / SLOTS_PER_SECOND


def collision_matrix(windows: Sequence[float], config: ScenarioConfig) -> np.ndarray:
    """delta[i][j] for every ordered pair, zero on the diagonal."""
    n = len(windows)
    delta = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                delta[i, j] = collision_probability(windows[i], windows[j], config)
    return delta


def _prr_from(delta: np.ndarray, half_duplex: np.ndarray, i: int) -> float:
    others = np.arange(delta.shape[0]) != i
    return float(np.prod(1.0 - delta[i, others]) * np.prod(1.0 - half_duplex[others]))


def prr(i: int, windows: Sequence[float], scenario: Scenario) -> float:
    delta = collision_matrix(windows, scenario.config)
    hd = np.array([half_duplex_probability(v.packet_rate) for v in scenario.vehicles])
    return _prr_from(delta, hd, i)


def _index_from(delta: np.ndarray, efficiency: float, speed: float, i: int) -> float:
    others = np.arange(delta.shape[0]) != i
    return efficiency * float(np.prod(1.0 - delta[i, others])) / speed


def fairness_index(i: int, windows: Sequence[float], scenario: Scenario) -> float:
    """K_index^i: traversal-averaged spectral efficiency times collision survival, over v_i."""
    vehicle = scenario.vehicles[i]
    delta = collision_matrix(windows, scenario.config)
    return _index_from(delta, channel.spectral_efficiency(vehicle, scenario.config), vehicle.speed, i)


def expected_bits(rate: float, dwell: float, prr_value: float) -> float:
    """Bits expected to be delivered during one pass, C_i T_i P_PRR."""
    return rate * dwell * prr_value


def fairness_report(windows: Sequence[float], scenario: Scenario) -> FairnessReport:
    config = scenario.config
    n = scenario.num_vehicles
    delta = collision_matrix(windows, config)
    hd = np.array([half_duplex_probability(v.packet_rate) for v in scenario.vehicles])
    rates = np.array([channel.traversal_rate(v, config) for v in scenario.vehicles])
    efficiency = rates / config.bandwidth

    indices = np.array([_index_from(delta, efficiency[i], scenario.vehicles[i].speed, i) for i in range(n)])
    prrs = np.array([_prr_from(delta, hd, i) for i in range(n)])
    network = float(np.mean(indices))
    bits = np.array([
        expected_bits(rates[i], dwell_time(config.rsu_coverage, scenario.vehicles[i].speed), prrs[i])
        for i in range(n)
    ])
    return FairnessReport(
        per_vehicle_index=indices,
        network_index=network,
        per_vehicle_prr=prrs,
        per_pair_collision=delta,
        per_vehicle_deviation=np.abs(network - indices),
        expected_bits=bits,
    )


def simulate_collision(
    w_i: int,
    w_j: int,
    config: ScenarioConfig,
    trials: int = 10_000_000,
    seed: int = 0,
    chunk: int = 1_000_000,
) -> float:
    """Monte Carlo estimate of the pairwise collision probability.

    Three independent experiments of ``trials`` draws each:
    window placement (uniform start slots on a circular frame, overlap counted),
    shared-resource selection (each vehicle lands in the shared region with
    probability N_Sc N_Sh / N_r), and PRB choice (uniform over N_Ca candidates
    of which the first C_Ca are common). The estimate is the product of the
    three hit frequencies.
    """
    rng = np.random.default_rng(seed)
    w_i, w_j = int(round(w_i)), int(round(w_j))
    frame = int(frame_slots(config.numerology, config.rri))
    q = config.num_subchannels * shared_resources(w_i, w_j) / config.total_resources
    if q > 1.0:
        raise ParameterInconsistencyError(f"shared-region probability {q:.4g} exceeds 1")
    n_ca = config.avg_candidates
    n_common = int(round(config.common_candidates))

    overlaps = shared = same_prb = 0
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        start_i = rng.integers(0, frame, size)
        start_j = rng.integers(0, frame, size)
        offset = (start_j - start_i) % frame
        overlaps += int(np.count_nonzero((offset <= w_i) | (offset >= frame - w_j)))

        in_i = rng.random(size) < q
        in_j = rng.random(size) < q
        shared += int(np.count_nonzero(in_i & in_j))

        pick_i = rng.integers(0, n_ca, size)
        pick_j = rng.integers(0, n_ca, size)
        same_prb += int(np.count_nonzero((pick_i == pick_j) & (pick_i < n_common)))
        done += size

    estimate = (overlaps / trials) * (shared / trials) * (same_prb / trials)
    logger.debug("Collision oracle w=(%d, %d): %.4e over %d trials", w_i, w_j, estimate, trials)
    return estimate
