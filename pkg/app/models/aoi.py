"""Age of information of the preemptive SPS channel as a stochastic hybrid system.

The discrete state is 0 (idle) or q (link q transmitting). From 0 the chain
moves to q at rate R_q; from q it returns to 0 at H_q (delivery) or moves to
j at p[q][j] (link q preempted by j). For a target link k the continuous
state is x = [x0, x1]: x0 is the age at the RSU and grows in every state,
x1 is the age of k's packet in service and grows only in state k. A delivery
by k sets x0 <- x1; any departure of k clears x1.

Preemption is a transition of the chain, so the stationary distribution and
the correlation vectors are obtained from the balance equations of the full
chain. Without preemption they reduce to the familiar closed forms
pi_q = R_q / (C H_q), v00 = 1 / R_k and Delta_k = v00 C + sum_q pi_q / H_q.
``decoupled_link_aoi`` keeps the variant that models preemption as a
service-rate reduction H_k - sum_j p[k][j]; it agrees with ``link_aoi`` only
when p = 0.

Links are indexed from 0. All config times are milliseconds; rates are 1/s.
"""

import bisect
import logging
from typing import Sequence

import numpy as np

from ..core.errors import InfeasibleRatesError, ParameterInconsistencyError
from ..schemas.schemas import Scenario, VehicleParams
from . import channel
from .models import RateSet, SHSSolution

logger = logging.getLogger(__name__)

MS = 1e-3


# ==================== TIMING ====================

def packet_time(vehicle: VehicleParams, scenario: Scenario) -> float:
    """t_pkt in ms: payload over the traversal-averaged rate."""
    rate = channel.traversal_rate(vehicle, scenario.config)
    if rate <= 0:
        raise ParameterInconsistencyError(f"vehicle {vehicle.id}: zero achievable rate")
    return scenario.config.packet_bits / rate / MS


def scheduling_time(window: float, scenario: Scenario) -> float:
    """t_sch = t_p + t_fa + w (ms)."""
    config = scenario.config
    return config.t_p + config.t_fa + window


def _positive(value: float, what: str) -> float:
    if not value > 0:
        raise ParameterInconsistencyError(f"{what} must be positive, got {value:g} ms")
    return value


def service_rate(vehicle: VehicleParams, window: float, scenario: Scenario, t_pkt: float | None = None) -> float:
    """H_i = 1 / (t_sch + t_pkt); a successful transmission has no retransmission time."""
    if t_pkt is None:
        t_pkt = packet_time(vehicle, scenario)
    t_s = _positive(scheduling_time(window, scenario) + t_pkt, "service time")
    return 1.0 / (t_s * MS)


def failure_rate(vehicle: VehicleParams, window: float, scenario: Scenario, t_pkt: float | None = None) -> float:
    """R_i = 1 / (T_ini + n T_r) with T_r = t_NACK + t_sch + t_pkt and t_NACK = t_p + t_fa + t_pkt."""
    config = scenario.config
    if t_pkt is None:
        t_pkt = packet_time(vehicle, scenario)
    t_sch = scheduling_time(window, scenario)
    t_ini = t_sch + t_pkt
    t_nack = config.t_p + config.t_fa + t_pkt
    t_r = t_nack + t_sch + t_pkt
    total = _positive(t_ini + config.retransmission_count * t_r, "failure cycle time")
    return 1.0 / (total * MS)


def preemption_rate(
    i: int,
    j: int,
    windows: Sequence[float],
    scenario: Scenario,
    priorities: Sequence[int] | None = None,
) -> float:
    """p[i][j] = 1 / (t_sch^i + t_p^j) when j outranks i, else 0."""
    if i == j:
        return 0.0
    if priorities is None:
        priorities = [vehicle.priority for vehicle in scenario.vehicles]
    if priorities[j] <= priorities[i]:
        return 0.0
    t = _positive(scheduling_time(windows[i], scenario) + scenario.config.t_p, "preemption time")
    return 1.0 / (t * MS)


def build_rates(windows: Sequence[float], scenario: Scenario) -> RateSet:
    n = scenario.num_vehicles
    t_pkt = [packet_time(vehicle, scenario) for vehicle in scenario.vehicles]
    H = [service_rate(v, windows[v.id], scenario, t_pkt[v.id]) for v in scenario.vehicles]
    R = [failure_rate(v, windows[v.id], scenario, t_pkt[v.id]) for v in scenario.vehicles]
    priorities = [vehicle.priority for vehicle in scenario.vehicles]
    p = np.array([[preemption_rate(i, j, windows, scenario, priorities) for j in range(n)] for i in range(n)])
    return RateSet(H=np.array(H), R=np.array(R), p=p)


# ==================== CLOSED FORM ====================

def check_rates(rates: RateSet) -> None:
    """Raise InfeasibleRatesError unless every rate is finite and the chain is well defined."""
    n = rates.size
    if rates.R.shape != (n,) or rates.p.shape != (n, n):
        raise InfeasibleRatesError(-1, "H, R and p have inconsistent shapes")
    for k in range(n):
        row = rates.p[k]
        if not (np.isfinite(rates.H[k]) and rates.H[k] > 0):
            raise InfeasibleRatesError(k, f"service rate H must be positive and finite, got {rates.H[k]:g}")
        if not (np.isfinite(rates.R[k]) and rates.R[k] > 0):
            raise InfeasibleRatesError(k, f"failure-return rate R must be positive and finite, got {rates.R[k]:g}")
        if not np.all(np.isfinite(row)) or np.any(row < 0):
            raise InfeasibleRatesError(k, "preemption rates must be finite and non-negative")
        if row[k] != 0:
            raise InfeasibleRatesError(k, "self-preemption rate must be zero")


def generator_matrix(rates: RateSet) -> np.ndarray:
    """Generator of the occupancy chain over states 0..N (state q + 1 is link q)."""
    n = rates.size
    Q = np.zeros((n + 1, n + 1))
    Q[0, 1:] = rates.R
    Q[1:, 0] = rates.H
    Q[1:, 1:] = rates.p
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


def stationary_distribution(rates: RateSet) -> tuple[np.ndarray, float]:
    """Return (pi_0..pi_N, C_R) with C_R = 1 / pi_0."""
    check_rates(rates)
    Q = generator_matrix(rates)
    A = Q.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(rates.size + 1)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    return pi, float(1.0 / pi[0])


def correlation_vectors(k: int, rates: RateSet, pi: np.ndarray | None = None) -> tuple[float, np.ndarray, float]:
    """Return (v00, [v_q0 for each link q], v_k1) for target link k.

    v01 and v_q1 (q != k) are zero.
    """
    if pi is None:
        pi, _ = stationary_distribution(rates)
    else:
        check_rates(rates)
    n = rates.size
    if not 0 <= k < n:
        raise InfeasibleRatesError(k, f"target link out of range 0..{n - 1}")
    out = rates.H + rates.preemption_out
    v_k1 = pi[k + 1] / out[k]

    # unknowns [v00, v_00..v_(N-1)0]; x0 keeps its value on every transition
    # except k -> idle, where it takes x1
    A = np.zeros((n + 1, n + 1))
    b = np.zeros(n + 1)
    A[0, 0] = rates.R.sum()
    for j in range(n):
        if j != k:
            A[0, j + 1] = -rates.H[j]
    b[0] = pi[0] + rates.H[k] * v_k1
    for q in range(n):
        A[q + 1, 0] = -rates.R[q]
        A[q + 1, q + 1] = out[q]
        for i in range(n):
            if i != q:
                A[q + 1, i + 1] -= rates.p[i, q]
        b[q + 1] = pi[q + 1]
    v = np.linalg.solve(A, b)
    return float(v[0]), v[1:], float(v_k1)


def link_aoi(k: int, rates: RateSet, pi: np.ndarray | None = None) -> float:
    v00, v_q0, _ = correlation_vectors(k, rates, pi)
    return float(v00 + v_q0.sum())


def network_aoi(rates: RateSet) -> float:
    pi, _ = stationary_distribution(rates)
    return float(np.mean([link_aoi(k, rates, pi) for k in range(rates.size)]))


def solve(rates: RateSet) -> SHSSolution:
    pi, normalizer = stationary_distribution(rates)
    n = rates.size
    v00 = np.zeros(n)
    v_q0 = np.zeros((n, n))
    v_k1 = np.zeros(n)
    for k in range(n):
        v00[k], v_q0[k], v_k1[k] = correlation_vectors(k, rates, pi)
    per_link = v00 + v_q0.sum(axis=1)
    return SHSSolution(
        pi=pi,
        normalizer=normalizer,
        v00=v00,
        v_q0=v_q0,
        v_k1=v_k1,
        per_link_aoi=per_link,
        network_aoi=float(per_link.mean()),
    )


def decoupled_link_aoi(k: int, rates: RateSet) -> float:
    """AoI of link k with preemption folded into the service rate.

    Uses pi_q = R_q / (C (H_q - sum_j p[j][q])) and the reduced rates
    D_q = H_q - sum_j p[q][j]; requires every reduced rate to be positive.
    """
    check_rates(rates)
    n = rates.size
    reduced = rates.H - rates.preemption_out
    reduced_in = rates.H - rates.p.sum(axis=0)
    for q in range(n):
        if reduced[q] <= 0 or reduced_in[q] <= 0:
            raise InfeasibleRatesError(q, "service rate does not exceed the total preemption rate")
    C = 1.0 + float(np.sum(rates.R / reduced_in))
    pi = rates.R / (C * reduced_in)
    v00 = reduced[k] / (rates.H[k] * rates.R[k])
    return float(v00 * C + np.sum(pi / reduced))


# ==================== MONTE CARLO ====================

def simulate_shs(rates: RateSet, target_link: int, horizon_events: int = 1_000_000, seed: int = 0) -> float:
    """Time-average of x0 along one CTMC path of ``horizon_events`` transitions.

    The first 1% of transitions are burn-in.
    """
    check_rates(rates)
    n = rates.size
    if not 0 <= target_link < n:
        raise InfeasibleRatesError(target_link, f"target link out of range 0..{n - 1}")
    Q = generator_matrix(rates)
    destinations, cumulative, mean_hold = [], [], []
    for s in range(n + 1):
        out = Q[s].copy()
        out[s] = 0.0
        nz = np.flatnonzero(out > 0)
        total = out[nz].sum()
        cum = (np.cumsum(out[nz]) / total).tolist()
        cum[-1] = 1.0
        destinations.append(nz.tolist())
        cumulative.append(cum)
        mean_hold.append(1.0 / total)

    rng = np.random.default_rng(seed)
    holds = rng.standard_exponential(horizon_events).tolist()
    draws = rng.random(horizon_events).tolist()
    burn_in = horizon_events // 100
    target = target_link + 1

    state = 0
    x0 = x1 = 0.0
    area = elapsed = 0.0
    for event in range(horizon_events):
        tau = holds[event] * mean_hold[state]
        if event >= burn_in:
            area += x0 * tau + 0.5 * tau * tau
            elapsed += tau
        x0 += tau
        nxt = destinations[state][bisect.bisect_right(cumulative[state], draws[event])]
        if state == target:
            x1 += tau
            if nxt == 0:
                x0 = x1
            x1 = 0.0
        state = nxt
    return area / elapsed
