"""Scenario validation, highway construction and scenario files."""

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from pydantic import ValidationError

from ..schemas.schemas import Scenario, ScenarioConfig, VehicleParams
from .errors import ScenarioError

logger = logging.getLogger(__name__)

MIN_LANE_GAP = 4.0
DEFAULT_SPEED_RANGE = (20.0, 30.0)


def _violations(exc: ValidationError) -> list[str]:
    messages = []
    for error in exc.errors():
        msg = error["msg"].removeprefix("Value error, ")
        loc = ".".join(str(part) for part in error["loc"])
        messages.append(f"{loc}: {msg}" if loc else msg)
    return messages


def validate(config: ScenarioConfig | Mapping[str, Any], vehicles: Iterable[VehicleParams | Mapping[str, Any]]) -> Scenario:
    """Check every bound and return an immutable scenario handle.

    Raises ScenarioError listing each offending field.
    """
    try:
        if not isinstance(config, ScenarioConfig):
            config = ScenarioConfig.model_validate(dict(config))
        vehicles = tuple(
            vehicle if isinstance(vehicle, VehicleParams) else VehicleParams.model_validate(dict(vehicle))
            for vehicle in vehicles
        )
        return Scenario(config=config, vehicles=vehicles)
    except ValidationError as exc:
        raise ScenarioError(_violations(exc)) from None


def default_priorities(n: int) -> list[int]:
    # vehicle 0 has the highest priority
    return [n - i for i in range(n)]


def default_lane_speeds(n: int, base: float = 20.0) -> list[float]:
    return [base + MIN_LANE_GAP * i for i in range(n)]


def build_highway(
    config: ScenarioConfig,
    lane_speeds: Sequence[float],
    speed_range: tuple[float, float] | None = DEFAULT_SPEED_RANGE,
    tx_power: float | None = None,
    packet_rate: float | None = None,
) -> list[VehicleParams]:
    """One vehicle per lane, lane i at ``lane_speeds[i]``."""
    violations = []
    if len(lane_speeds) == 0:
        violations.append("lane_speeds: at least one lane is required")
    if speed_range is not None:
        low, high = speed_range
        for i, v in enumerate(lane_speeds):
            if not low <= v <= high:
                violations.append(f"lane_speeds[{i}]: speed {v} outside [{low}, {high}] m/s")
    for i in range(1, len(lane_speeds)):
        gap = abs(lane_speeds[i] - lane_speeds[i - 1])
        if gap < MIN_LANE_GAP:
            violations.append(
                f"lane_speeds[{i}]: adjacent-lane speed gap {gap:g} m/s is below {MIN_LANE_GAP:g} m/s"
            )
    if violations:
        raise ScenarioError(violations)

    n = len(lane_speeds)
    priorities = default_priorities(n)
    extras = {}
    if tx_power is not None:
        extras["tx_power"] = tx_power
    if packet_rate is not None:
        extras["packet_rate"] = packet_rate
    try:
        return [
            VehicleParams(id=i, speed=float(v), priority=priorities[i], lane_index=i, **extras)
            for i, v in enumerate(lane_speeds)
        ]
    except ValidationError as exc:
        raise ScenarioError(_violations(exc)) from None


def highway_scenario(
    config: ScenarioConfig,
    lane_speeds: Sequence[float],
    speed_range: tuple[float, float] | None = DEFAULT_SPEED_RANGE,
) -> Scenario:
    if config.num_vehicles != len(lane_speeds):
        config = config.model_copy(update={"num_vehicles": len(lane_speeds)})
    return validate(config, build_highway(config, lane_speeds, speed_range=speed_range))


def scenario_from_dict(raw: Mapping[str, Any]) -> Scenario:
    """Build a scenario from a parsed scenario file.

    Besides the ScenarioConfig fields the object may carry ``vehicles`` (a
    list of VehicleParams objects) or ``lane_speeds``; without either, lanes
    default to 20, 24, 28, ... m/s.
    """
    raw = dict(raw)
    vehicles = raw.pop("vehicles", None)
    lane_speeds = raw.pop("lane_speeds", None)
    if vehicles is not None and lane_speeds is not None:
        raise ScenarioError("vehicles: give either vehicles or lane_speeds, not both")
    try:
        config = ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        raise ScenarioError(_violations(exc)) from None
    if vehicles is not None:
        return validate(config, vehicles)
    if lane_speeds is not None:
        return validate(config, build_highway(config, lane_speeds))
    speeds = default_lane_speeds(config.num_vehicles)
    return validate(config, build_highway(config, speeds, speed_range=None))


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"scenario: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario: invalid JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ScenarioError("scenario: top-level JSON value must be an object")
    scenario = scenario_from_dict(raw)
    logger.debug("Loaded scenario with %d vehicles from %s", scenario.num_vehicles, path)
    return scenario


def scenario_to_dict(scenario: Scenario) -> dict[str, Any]:
    data = scenario.config.model_dump(mode="json")
    data["vehicles"] = [vehicle.model_dump(mode="json") for vehicle in scenario.vehicles]
    return data


def dump_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2))


def check_windows(windows: Sequence[float], config: ScenarioConfig) -> np.ndarray:
    """Return ``windows`` as an array after checking length and bounds."""
    w = np.asarray(windows, dtype=float)
    if w.shape != (config.num_vehicles,):
        raise ScenarioError(f"windows: expected {config.num_vehicles} values, got {w.size}")
    low, high = config.window_bounds
    bad = [i for i, value in enumerate(w) if not low <= value <= high]
    if bad:
        raise ScenarioError([f"windows[{i}]: {w[i]:g} outside [{low:g}, {high:g}] ms" for i in bad])
    return w
