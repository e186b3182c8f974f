from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ChannelState:
    """Complex channel gain together with its AR(1) parameters."""

    gain: complex
    rho: float
    doppler: float = 0.0

    def __post_init__(self):
        if abs(self.rho) > 1:
            raise ValueError("rho must satisfy |rho| <= 1")


@dataclass(frozen=True)
class RateSet:
    """Per-link service rates H, failure-return rates R and preemption matrix p (1/s).

    ``p[i][j]`` is the rate at which link i is preempted by link j.
    """

    H: np.ndarray
    R: np.ndarray
    p: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "H", np.asarray(self.H, dtype=float).reshape(-1))
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float).reshape(-1))
        n = self.H.size
        p = np.zeros((n, n)) if self.p is None else np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)

    @property
    def size(self) -> int:
        return self.H.size

    @property
    def preemption_out(self) -> np.ndarray:
        """Total rate at which each link is preempted, sum_j p[k][j]."""
        return self.p.sum(axis=1)

    def scaled(self, factor: float) -> "RateSet":
        return RateSet(self.H * factor, self.R * factor, self.p * factor)


@dataclass(frozen=True)
class SHSSolution:
    pi: np.ndarray
    normalizer: float
    v00: np.ndarray
    v_q0: np.ndarray
    v_k1: np.ndarray
    per_link_aoi: np.ndarray
    network_aoi: float


@dataclass(frozen=True)
class FairnessReport:
    per_vehicle_index: np.ndarray
    network_index: float
    per_vehicle_prr: np.ndarray
    per_pair_collision: np.ndarray
    per_vehicle_deviation: np.ndarray
    expected_bits: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.per_vehicle_deviation))


@dataclass(frozen=True)
class PromptBundle:
    rendered_text: str
    parent_vectors_normalized: np.ndarray
    parent_objective_values: np.ndarray
    expected_dimension: int


@dataclass(frozen=True)
class HvReport:
    operator: str
    per_generation_hv: list[float]
    reference_point: list[float]
    converged_at: int | None
    elapsed_s: float = 0.0


def weakly_dominates(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.all(a <= b))


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.all(a <= b) and np.any(a < b))


@dataclass
class ParetoArchive:
    """Mutually nondominated (window, objective) pairs plus the ideal point.

    ``history`` keeps a copy of the archive objectives after every generation
    and ``ideal_history`` the matching ideal points.
    """

    num_objectives: int
    windows: list[np.ndarray] = field(default_factory=list)
    objectives: list[np.ndarray] = field(default_factory=list)
    ideal_point: np.ndarray | None = None
    history: list[np.ndarray] = field(default_factory=list)
    ideal_history: list[np.ndarray] = field(default_factory=list)
    evaluations: int = 0
    replacements: int = 0
    elapsed_s: float = 0.0

    def __post_init__(self):
        if self.ideal_point is None:
            self.ideal_point = np.full(self.num_objectives, np.inf)

    def __len__(self) -> int:
        return len(self.objectives)

    @property
    def entries(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.windows, self.objectives))

    def update_ideal(self, f: np.ndarray) -> None:
        self.ideal_point = np.minimum(self.ideal_point, f)

    def add(self, w: np.ndarray, f: np.ndarray) -> bool:
        """Insert ``(w, f)`` unless an entry weakly dominates it; prune what it dominates."""
        f = np.asarray(f, dtype=float)
        for existing in self.objectives:
            if weakly_dominates(existing, f):
                return False
        keep = [i for i, existing in enumerate(self.objectives) if not dominates(f, existing)]
        self.windows = [self.windows[i] for i in keep] + [np.array(w, dtype=float)]
        self.objectives = [self.objectives[i] for i in keep] + [f.copy()]
        return True

    def snapshot(self) -> None:
        self.history.append(self.objective_matrix())
        self.ideal_history.append(self.ideal_point.copy())

    def objective_matrix(self) -> np.ndarray:
        if not self.objectives:
            return np.empty((0, self.num_objectives))
        return np.vstack(self.objectives)

    def window_matrix(self) -> np.ndarray:
        if not self.windows:
            return np.empty((0, 0))
        return np.vstack(self.windows)

    def is_mutually_nondominated(self) -> bool:
        F = self.objective_matrix()
        for i in range(len(F)):
            for j in range(len(F)):
                if i != j and dominates(F[i], F[j]):
                    return False
        return True
