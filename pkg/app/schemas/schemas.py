import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core import config as settings

OperatorName = Literal["sbx", "de", "llm", "mock-llm"]

DEFAULT_NOISE_DB = 9.0


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


class ScenarioConfig(BaseModel):
    """Physical and protocol parameters of one experiment.

    Times are milliseconds, noise is linear (``noise_db`` is accepted on input
    and converted).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_vehicles: int = 3
    bandwidth: float = 20e6
    path_loss_exponent: float = 3.0
    noise_power: float = Field(default_factory=lambda: db_to_linear(DEFAULT_NOISE_DB))
    rsu_coverage: float = 200.0
    rsu_offset: float = 5.0
    lane_width: float = 3.5
    numerology: int = 0
    rri: float = 100.0
    num_subchannels: int = 10
    total_resources: int = 100
    avg_candidates: int = 10
    shared_candidates: Optional[float] = None
    packet_bits: float = 500.0
    t_fa: float = 0.468
    t_p: float = 0.5
    retransmission_count: int = 1
    window_bounds: tuple[float, float] = (20.0, 150.0)
    carrier_wavelength: float = 0.0508
    rng_seed: int = 0

    @model_validator(mode="before")
    @classmethod
    def convert_noise_db(cls, data):
        if isinstance(data, dict) and "noise_db" in data:
            data = dict(data)
            noise_db = data.pop("noise_db")
            if "noise_power" in data:
                raise ValueError("give either noise_db or noise_power, not both")
            data["noise_power"] = db_to_linear(float(noise_db))
        return data

    @field_validator("num_vehicles")
    @classmethod
    def check_vehicle_count(cls, v):
        if v < 1:
            raise ValueError("num_vehicles must be at least 1")
        return v

    @field_validator(
        "bandwidth", "noise_power", "rsu_coverage", "rri", "num_subchannels",
        "total_resources", "avg_candidates", "carrier_wavelength",
    )
    @classmethod
    def check_positive(cls, v, info):
        if not v > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator("rsu_offset")
    @classmethod
    def check_offset(cls, v):
        # d = 0 is singular in the path-loss term
        if not v > 0:
            raise ValueError("rsu_offset must be positive")
        return v

    @field_validator("lane_width", "packet_bits", "t_p", "numerology", "retransmission_count", "path_loss_exponent")
    @classmethod
    def check_non_negative(cls, v, info):
        if v < 0:
            raise ValueError(f"{info.field_name} must be non-negative")
        return v

    @field_validator("t_fa")
    @classmethod
    def check_slot_duration(cls, v):
        if not 0.0625 <= v <= 1.0:
            raise ValueError("t_fa must lie within [0.0625, 1] ms")
        return v

    @model_validator(mode="after")
    def check_cross_field(self):
        problems = []
        if self.num_subchannels > self.total_resources:
            problems.append("num_subchannels must not exceed total_resources")
        low, high = self.window_bounds
        if low > high:
            problems.append("window bounds inverted")
        if low < 0:
            problems.append("window bounds must be non-negative")
        shared = self.shared_candidates
        if shared is not None and not 0 <= shared <= self.avg_candidates ** 2:
            problems.append("shared_candidates must lie within [0, avg_candidates**2]")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def common_candidates(self) -> float:
        """C_Ca, defaulting to the full-overlap worst case N_Ca."""
        if self.shared_candidates is None:
            return float(self.avg_candidates)
        return float(self.shared_candidates)

    @property
    def noise_db(self) -> float:
        return 10.0 * math.log10(self.noise_power)


class VehicleParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: int
    speed: float
    tx_power: float = 8.0e6
    priority: int = 0
    packet_rate: float = 10.0
    lane_index: int = 0
    cos_theta: float = 1.0

    @field_validator("speed", "tx_power")
    @classmethod
    def check_positive(cls, v, info):
        if not v > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator("packet_rate")
    @classmethod
    def check_packet_rate(cls, v):
        if v < 0:
            raise ValueError("packet_rate must be non-negative")
        return v

    @field_validator("cos_theta")
    @classmethod
    def check_cosine(cls, v):
        if abs(v) > 1:
            raise ValueError("cos_theta must lie within [-1, 1]")
        return v

    @field_validator("lane_index")
    @classmethod
    def check_lane(cls, v):
        if v < 0:
            raise ValueError("lane_index must be non-negative")
        return v


class Scenario(BaseModel):
    """Validated, immutable experiment handle."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    config: ScenarioConfig
    vehicles: tuple[VehicleParams, ...]

    @model_validator(mode="after")
    def check_vehicle_set(self):
        if len(self.vehicles) != self.config.num_vehicles:
            raise ValueError(
                f"num_vehicles is {self.config.num_vehicles} but {len(self.vehicles)} vehicles were given"
            )
        ids = [vehicle.id for vehicle in self.vehicles]
        if ids != list(range(len(ids))):
            raise ValueError("vehicle ids must be 0..N-1 in order")
        return self

    @property
    def num_vehicles(self) -> int:
        return self.config.num_vehicles

    @property
    def num_objectives(self) -> int:
        return self.config.num_vehicles + 1

    @property
    def speeds(self) -> list[float]:
        return [vehicle.speed for vehicle in self.vehicles]


class WindowVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    w: tuple[float, ...]

    @field_validator("w")
    @classmethod
    def check_finite(cls, v):
        if not v:
            raise ValueError("window vector must not be empty")
        if not all(math.isfinite(x) for x in v):
            raise ValueError("window sizes must be finite")
        return v


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    generations: int = 100
    partitions: int = 7
    neighborhood_size: int = 20
    neighbor_prob: float = 0.8
    operator: OperatorName = "sbx"
    rng_seed: int = 0
    workers: int = 1
    crossover_eta: float = 20.0
    mutation_eta: float = 20.0
    de_scale: float = 0.5
    de_crossover_rate: float = 0.9
    llm_parents: int = 2

    @field_validator("generations")
    @classmethod
    def check_generations(cls, v):
        if v < 0:
            raise ValueError("generations must be non-negative")
        return v

    @field_validator("partitions", "neighborhood_size", "workers")
    @classmethod
    def check_at_least_one(cls, v, info):
        if v < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return v

    @field_validator("neighbor_prob", "de_crossover_rate")
    @classmethod
    def check_probability(cls, v, info):
        if not 0 <= v <= 1:
            raise ValueError(f"{info.field_name} must lie within [0, 1]")
        return v

    @field_validator("llm_parents")
    @classmethod
    def check_parent_count(cls, v):
        if not 2 <= v <= 5:
            raise ValueError("llm_parents must lie within [2, 5]")
        return v

    def population_size(self, num_objectives: int) -> int:
        """H = C(n_p + M - 1, M - 1)."""
        return math.comb(self.partitions + num_objectives - 1, num_objectives - 1)


class LlmConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    endpoint_url: str
    model_name: str = "deepseek-chat"
    api_key_source: str = "LLM_API_KEY"
    temperature: float = 0.7
    timeout: float = 30.0
    max_retries: int = 3
    max_concurrent: int = 4
    min_interval: float = 0.0

    @field_validator("max_retries", "max_concurrent")
    @classmethod
    def check_at_least_one(cls, v, info):
        if v < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return v

    @field_validator("timeout")
    @classmethod
    def check_timeout(cls, v):
        if not v > 0:
            raise ValueError("timeout must be positive")
        return v

    @classmethod
    def from_env(cls) -> "LlmConfig":
        return cls(
            endpoint_url=settings.LLM_ENDPOINT,
            model_name=settings.LLM_MODEL,
            api_key_source=settings.LLM_API_KEY_VAR,
            temperature=settings.LLM_TEMPERATURE,
            timeout=settings.LLM_TIMEOUT,
            max_retries=settings.LLM_MAX_RETRIES,
            max_concurrent=settings.LLM_MAX_CONCURRENT,
            min_interval=settings.LLM_MIN_INTERVAL,
        )


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    sweep_variable: Literal["avg_velocity", "num_vehicles"]
    values: tuple[float, ...]
    repetitions: int = 30
    operators: tuple[OperatorName, ...] = ("mock-llm",)
    fixed_window_baseline: float = 100.0
    optimizer: OptimizerConfig = OptimizerConfig()
    master_seed: int = 0
    workers: int = 1

    @field_validator("values")
    @classmethod
    def check_values(cls, v):
        if not v:
            raise ValueError("values must not be empty")
        return v

    @field_validator("repetitions", "workers")
    @classmethod
    def check_at_least_one(cls, v, info):
        if v < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return v


# ==================== HTTP BODIES ====================

class EvaluateRequest(BaseModel):
    scenario: dict
    windows: list[float]


class OptimizeRequest(BaseModel):
    scenario: dict
    optimizer: OptimizerConfig = OptimizerConfig(generations=20)
    operator: OperatorName = "sbx"


class FairnessResponse(BaseModel):
    per_vehicle_index: list[float]
    network_index: float
    per_vehicle_prr: list[float]
    per_pair_collision: list[list[float]]
    per_vehicle_deviation: list[float]
    expected_bits: list[float]


class AoiResponse(BaseModel):
    H: list[float]
    R: list[float]
    sum_p: list[float]
    pi: list[float]
    normalizer: float
    per_link_aoi: list[float]
    network_aoi: float


class ArchiveEntryResponse(BaseModel):
    windows: list[float]
    objectives: list[float]


class OptimizeResponse(BaseModel):
    operator: str
    entries: list[ArchiveEntryResponse]
    k_bound: float
    selected_windows: list[float]
