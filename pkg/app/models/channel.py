"""Propagation, Doppler, AR fading and Shannon rate.

Objective evaluation runs in deterministic mode (unit channel gain, rate
averaged over the coverage chord in 1 m steps). The AR(1) fading path with
Jakes autocorrelation is available when an explicit RNG is passed.
"""

import functools
import logging
import math

import numpy as np
from scipy import signal, special

from ..core.errors import ParameterInconsistencyError
from ..schemas.schemas import ScenarioConfig, VehicleParams
from .models import ChannelState

logger = logging.getLogger(__name__)

SAMPLE_STEP_M = 1.0


def distance(vehicle_pos: tuple[float, float], rsu_pos: tuple[float, float]) -> float:
    return float(math.hypot(vehicle_pos[0] - rsu_pos[0], vehicle_pos[1] - rsu_pos[1]))


def doppler(v: float, wavelength: float, cos_theta: float = 1.0) -> float:
    """f_d = (v / wavelength) * cos(theta), in Hz."""
    if wavelength <= 0:
        raise ParameterInconsistencyError("carrier_wavelength must be positive")
    return v / wavelength * cos_theta


def autocorrelation(f_d: float, t: float) -> float:
    """Jakes autocorrelation J0(2 pi f_d t)."""
    return float(special.j0(2.0 * math.pi * f_d * t))


def complex_gaussian(rng: np.random.Generator, size=None):
    """Circularly symmetric complex Gaussian with unit variance."""
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) / math.sqrt(2.0)


def evolve_gain(state: ChannelState, rng: np.random.Generator) -> ChannelState:
    e = complex(complex_gaussian(rng))
    rho = state.rho
    h = rho * state.gain + math.sqrt(1.0 - rho * rho) * e
    return ChannelState(gain=complex(h), rho=rho, doppler=state.doppler)


def gain_trace(state: ChannelState, steps: int, rng: np.random.Generator) -> np.ndarray:
    """``steps`` successive gains of the AR(1) recursion started from ``state``."""
    rho = state.rho
    innovations = complex_gaussian(rng, steps)
    # h[n] = rho * h[n-1] + sqrt(1 - rho^2) * e[n], seeded with h[-1] = state.gain
    zi = np.array([rho * state.gain], dtype=complex)
    trace, _ = signal.lfilter([math.sqrt(1.0 - rho * rho)], [1.0, -rho], innovations, zi=zi)
    return trace


def shannon_rate(p_i, h, d, path_loss_exponent: float, noise_power: float, bandwidth: float):
    """B log2(1 + p g d^-alpha / sigma^2) with g = |h|^2, or g = 1 when ``h`` is None."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ParameterInconsistencyError("distance must be positive (path loss is singular at d = 0)")
    if bandwidth <= 0 or noise_power <= 0:
        raise ParameterInconsistencyError("bandwidth and noise_power must be positive")
    g = 1.0 if h is None else np.abs(h) ** 2
    snr = p_i * g * d ** (-path_loss_exponent) / noise_power
    rate = bandwidth * np.log2(1.0 + snr)
    return float(rate) if rate.ndim == 0 else rate


def lateral_offset(vehicle: VehicleParams, config: ScenarioConfig) -> float:
    return config.rsu_offset + vehicle.lane_index * config.lane_width


def rsu_position(vehicle: VehicleParams, config: ScenarioConfig) -> tuple[float, float]:
    # RSU sits at the longitudinal midpoint of the coverage chord
    return (config.rsu_coverage / 2.0, -lateral_offset(vehicle, config))


def chord_positions(config: ScenarioConfig) -> np.ndarray:
    """Longitudinal sample points 0, 1, ..., R (metres) across the coverage chord."""
    xs = np.arange(0.0, config.rsu_coverage, SAMPLE_STEP_M)
    return np.append(xs, config.rsu_coverage)


def chord_distances(vehicle: VehicleParams, config: ScenarioConfig) -> np.ndarray:
    rx, ry = rsu_position(vehicle, config)
    xs = chord_positions(config)
    return np.hypot(xs - rx, ry)


def traversal_rate(vehicle: VehicleParams, config: ScenarioConfig, rng: np.random.Generator | None = None) -> float:
    """Shannon rate averaged over the vehicle's pass through coverage (bit/s).

    With ``rng`` the gain follows the AR(1) fading process, one step per metre
    (step duration 1 m / v).
    """
    if rng is None:
        return _deterministic_rate(vehicle, config)
    d = chord_distances(vehicle, config)
    f_d = doppler(vehicle.speed, config.carrier_wavelength, vehicle.cos_theta)
    rho = autocorrelation(f_d, SAMPLE_STEP_M / vehicle.speed)
    start = ChannelState(gain=complex(complex_gaussian(rng)), rho=rho, doppler=f_d)
    h = np.concatenate([[start.gain], gain_trace(start, d.size - 1, rng)])
    rates = shannon_rate(
        vehicle.tx_power, h, d, config.path_loss_exponent, config.noise_power, config.bandwidth
    )
    return float(np.mean(rates))


def spectral_efficiency(vehicle: VehicleParams, config: ScenarioConfig) -> float:
    """Traversal-averaged log2(1 + SNR) in deterministic mode."""
    return traversal_rate(vehicle, config) / config.bandwidth


@functools.lru_cache(maxsize=1024)
def _deterministic_rate(vehicle: VehicleParams, config: ScenarioConfig) -> float:
    rates = shannon_rate(
        vehicle.tx_power, None, chord_distances(vehicle, config),
        config.path_loss_exponent, config.noise_power, config.bandwidth,
    )
    return float(np.mean(rates))
