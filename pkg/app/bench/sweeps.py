"""Experiment orchestration: velocity and vehicle-count sweeps, operator comparison.

Per-trial seeds are derived from the master seed and a run counter, so the
rows (except wall-clock columns) do not depend on the worker count.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..api.llm_operator import CompletionClient
from ..core.errors import FairlineError, OperatorUnavailableError
from ..core.scenario import highway_scenario
from ..models import aoi, fairness
from ..models.models import HvReport
from ..optim import metrics, moead
from ..optim.registry import build_operator
from ..schemas.schemas import LlmConfig, Scenario, ScenarioConfig, SweepSpec

logger = logging.getLogger(__name__)

LANE_GAP = 4.0
BASELINE = "baseline"


@dataclass
class SweepResult:
    rows: pd.DataFrame
    failures: int = 0
    skipped: list[str] = field(default_factory=list)


@dataclass
class ComparisonResult:
    rows: pd.DataFrame
    summary: pd.DataFrame
    reports: list[HvReport]
    skipped: list[str] = field(default_factory=list)


def trial_seed(master_seed: int, counter: int) -> int:
    return int(np.random.SeedSequence([master_seed, counter]).generate_state(1)[0])


def velocity_lanes(avg_velocity: float, n: int) -> list[float]:
    """Lane speeds centred on ``avg_velocity`` with 4 m/s gaps."""
    return [avg_velocity + LANE_GAP * (i - (n - 1) / 2.0) for i in range(n)]


def count_lanes(n: int, base: float = 20.0) -> list[float]:
    return [base + LANE_GAP * i for i in range(n)]


def _solution_columns(prefix_values: dict, windows, report, fage: float, n: int) -> dict:
    row = dict(prefix_values)
    for i in range(n):
        row[f"w{i + 1}"] = float(windows[i])
    for i in range(n):
        row[f"fk{i + 1}"] = float(report.per_vehicle_deviation[i])
    row["fage"] = float(fage)
    for i in range(n):
        row[f"kindex{i + 1}"] = float(report.per_vehicle_index[i])
    row["kindex_avg"] = float(report.network_index)
    row["max_fk"] = float(report.max_deviation)
    row["error"] = ""
    return row


def _failed_columns(prefix_values: dict, n: int, error: str) -> dict:
    row = dict(prefix_values)
    for name in ("w", "fk"):
        for i in range(n):
            row[f"{name}{i + 1}"] = np.nan
    row["fage"] = np.nan
    for i in range(n):
        row[f"kindex{i + 1}"] = np.nan
    row["kindex_avg"] = np.nan
    row["max_fk"] = np.nan
    row["error"] = error
    return row


def evaluate_baseline(scenario: Scenario, window: float):
    windows = np.full(scenario.num_vehicles, float(window))
    report = fairness.fairness_report(windows, scenario)
    fage = aoi.network_aoi(aoi.build_rates(windows, scenario))
    return windows, report, fage


def optimize_once(
    scenario: Scenario,
    spec: SweepSpec,
    operator_name: str,
    seed: int,
    llm_config: LlmConfig | None = None,
    client: CompletionClient | None = None,
):
    optimizer = spec.optimizer.model_copy(update={"rng_seed": seed, "operator": operator_name})
    operator = build_operator(operator_name, scenario, optimizer, llm_config, client)
    archive = moead.evolve(scenario, optimizer, operator)
    windows, _ = moead.select_solution(archive, scenario)
    report = fairness.fairness_report(windows, scenario)
    fage = aoi.network_aoi(aoi.build_rates(windows, scenario))
    return windows, report, fage


def _check_operators(spec, scenario, llm_config, client) -> tuple[list[str], list[str]]:
    available, skipped = [], []
    for name in spec.operators:
        try:
            build_operator(name, scenario, spec.optimizer, llm_config, client)
            available.append(name)
        except OperatorUnavailableError as exc:
            logger.warning("Skipping operator %s: %s", name, exc)
            skipped.append(name)
    return available, skipped


def _run_sweep(spec, scenarios, key, n_of, llm_config, client) -> SweepResult:
    """``scenarios`` maps each sweep value to its scenario (or the error that prevented building it)."""
    first = next((s for s in scenarios.values() if isinstance(s, Scenario)), None)
    operators, skipped = (
        _check_operators(spec, first, llm_config, client) if first is not None else (list(spec.operators), [])
    )

    jobs = []
    counter = 0
    for value, scenario in scenarios.items():
        jobs.append((value, BASELINE, 0, None, scenario))
        for name in operators:
            for trial in range(spec.repetitions):
                jobs.append((value, name, trial, trial_seed(spec.master_seed, counter), scenario))
                counter += 1

    def run(job):
        value, name, trial, seed, scenario = job
        prefix = {key: value, "operator": name, "trial": trial}
        if isinstance(scenario, Exception):
            return _failed_columns(prefix, n_of(value), str(scenario)), False
        n = scenario.num_vehicles
        try:
            if name == BASELINE:
                result = evaluate_baseline(scenario, spec.fixed_window_baseline)
            else:
                result = optimize_once(scenario, spec, name, seed, llm_config, client)
            return _solution_columns(prefix, *result, n), True
        except FairlineError as exc:
            logger.error("%s=%s operator=%s trial=%d failed: %s", key, value, name, trial, exc)
            return _failed_columns(prefix, n, str(exc)), False

    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        outcomes = list(pool.map(run, jobs))

    rows = pd.DataFrame([row for row, _ in outcomes])
    failures = sum(1 for _, ok in outcomes if not ok)
    return SweepResult(rows=rows, failures=failures, skipped=skipped)


def sweep_velocity(
    spec: SweepSpec,
    template: ScenarioConfig,
    llm_config: LlmConfig | None = None,
    client: CompletionClient | None = None,
) -> SweepResult:
    """Baseline and optimized solutions per average velocity.

    Each average velocity gets one baseline row (trial 0) and ``repetitions``
    rows per operator.
    """
    scenarios = {}
    for avg_v in spec.values:
        try:
            scenarios[float(avg_v)] = highway_scenario(
                template, velocity_lanes(avg_v, template.num_vehicles), speed_range=None
            )
        except FairlineError as exc:
            scenarios[float(avg_v)] = exc
    n = template.num_vehicles
    result = _run_sweep(spec, scenarios, "avg_v", lambda _: n, llm_config, client)
    columns = (
        ["avg_v", "operator", "trial"]
        + [f"w{i + 1}" for i in range(n)]
        + [f"fk{i + 1}" for i in range(n)]
        + ["fage"]
        + [f"kindex{i + 1}" for i in range(n)]
        + ["kindex_avg", "error"]
    )
    result.rows = result.rows[columns]
    return result


def sweep_vehicles(
    spec: SweepSpec,
    template: ScenarioConfig,
    llm_config: LlmConfig | None = None,
    client: CompletionClient | None = None,
) -> SweepResult:
    """Network fairness index and mean AoI per vehicle count, lanes at 20, 24, 28, ... m/s."""
    scenarios = {}
    for n in spec.values:
        n = int(n)
        try:
            scenarios[n] = highway_scenario(template, count_lanes(n), speed_range=None)
        except FairlineError as exc:
            scenarios[n] = exc
    result = _run_sweep(spec, scenarios, "n_vehicles", int, llm_config, client)
    result.rows = result.rows[["n_vehicles", "operator", "trial", "kindex_avg", "max_fk", "fage", "error"]]
    return result


def summarize(rows: pd.DataFrame, key: str) -> pd.DataFrame:
    """Mean and standard deviation of every numeric column per (sweep value, operator)."""
    numeric = rows.drop(columns=["trial"]).select_dtypes("number").columns.drop(key, errors="ignore")
    grouped = rows.groupby([key, "operator"], sort=False)[list(numeric)]
    summary = grouped.agg(["mean", "std"])
    summary.columns = [f"{col}_{stat}" for col, stat in summary.columns]
    return summary.reset_index()


def compare_operators(
    spec: SweepSpec,
    scenario: Scenario,
    llm_config: LlmConfig | None = None,
    client: CompletionClient | None = None,
    convergence_window: int = 10,
    convergence_epsilon: float = 1e-6,
) -> ComparisonResult:
    """Per-generation normalized HV for every operator and trial."""
    operators, skipped = _check_operators(spec, scenario, llm_config, client)
    jobs = []
    counter = 0
    for name in operators:
        for trial in range(spec.repetitions):
            jobs.append((name, trial, trial_seed(spec.master_seed, counter)))
            counter += 1

    def run(job):
        name, trial, seed = job
        optimizer = spec.optimizer.model_copy(update={"rng_seed": seed, "operator": name})
        operator = build_operator(name, scenario, optimizer, llm_config, client)
        started = time.perf_counter()
        archive = moead.evolve(scenario, optimizer, operator)
        return archive.history, time.perf_counter() - started

    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        outcomes = list(pool.map(run, jobs))

    histories = {(name, trial): history for (name, trial, _), (history, _) in zip(jobs, outcomes)}
    series, ref = metrics.normalized_hv_series(histories)

    rows, summary, reports = [], [], []
    for (name, trial, _), (_, elapsed) in zip(jobs, outcomes):
        hv = series[(name, trial)]
        converged = metrics.track_convergence(hv, convergence_window, convergence_epsilon)
        for generation, value in enumerate(hv):
            rows.append({"operator": name, "trial": trial, "generation": generation, "hv": value, "elapsed_s": elapsed})
        summary.append({
            "operator": name,
            "trial": trial,
            "final_hv": hv[-1],
            "converged_at": converged if converged is not None else -1,
            "elapsed_s": elapsed,
        })
        reports.append(HvReport(name, hv, ref.tolist(), converged, elapsed))
    return ComparisonResult(
        rows=pd.DataFrame(rows, columns=["operator", "trial", "generation", "hv", "elapsed_s"]),
        summary=pd.DataFrame(summary, columns=["operator", "trial", "final_hv", "converged_at", "elapsed_s"]),
        reports=reports,
        skipped=skipped,
    )
