"""Command-line surface: ``fairline <subcommand>``."""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from .bench import sweeps
from .core import config as settings
from .core.errors import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_PARTIAL_FAILURE, FairlineError, ScenarioError
from .core.scenario import check_windows, load_scenario, scenario_from_dict
from .models import aoi, fairness
from .optim import metrics, moead
from .optim.registry import OPERATORS, build_operator
from .schemas.schemas import OptimizerConfig, Scenario, SweepSpec

logger = logging.getLogger("app.cli")


def _scenario(args) -> Scenario:
    if args.scenario:
        return load_scenario(args.scenario)
    return scenario_from_dict({})


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ScenarioError(f"expected comma-separated numbers, got {text!r}") from None


def _windows(args, scenario: Scenario) -> np.ndarray:
    if args.windows is None:
        values = [args.baseline_window]
    else:
        values = _floats(args.windows)
    if len(values) == 1:
        values = values * scenario.num_vehicles
    return check_windows(values, scenario.config)


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(frame: pd.DataFrame, out: Path | None, name: str) -> None:
    if out is None:
        print(frame.to_csv(index=False), end="")
    else:
        path = out / name
        frame.to_csv(path, index=False)
        print(f"wrote {path}")


def _optimizer(args) -> OptimizerConfig:
    return OptimizerConfig(
        generations=args.generations,
        partitions=args.partitions,
        neighborhood_size=args.neighbors,
        neighbor_prob=args.neighbor_prob,
        rng_seed=args.seed,
        workers=args.workers,
        llm_parents=args.llm_parents,
    )


# ==================== SUBCOMMANDS ====================

def cmd_aoi(args) -> int:
    scenario = _scenario(args)
    windows = _windows(args, scenario)
    rates = aoi.build_rates(windows, scenario)
    solution = aoi.solve(rates)
    table = pd.DataFrame({
        "link": np.arange(scenario.num_vehicles),
        "H": rates.H,
        "R": rates.R,
        "sum_p": rates.preemption_out,
        "pi": solution.pi[1:],
        "delta": solution.per_link_aoi,
    })
    if args.simulate:
        table["delta_mc"] = [
            aoi.simulate_shs(rates, k, args.simulate, seed=args.seed) for k in range(scenario.num_vehicles)
        ]
    print(table.to_string(index=False))
    print(f"pi_0 = {solution.pi[0]:.6g}   C_R = {solution.normalizer:.6g}   network AoI = {solution.network_aoi:.6g} s")
    _emit(table, _out_dir(args), "aoi.csv")
    return EXIT_OK


def cmd_fairness(args) -> int:
    scenario = _scenario(args)
    windows = _windows(args, scenario)
    report = fairness.fairness_report(windows, scenario)
    table = pd.DataFrame({
        "vehicle": np.arange(scenario.num_vehicles),
        "speed": scenario.speeds,
        "window": windows,
        "kindex": report.per_vehicle_index,
        "prr": report.per_vehicle_prr,
        "fk": report.per_vehicle_deviation,
        "expected_bits": report.expected_bits,
    })
    print(table.to_string(index=False))
    print(f"network fairness index = {report.network_index:.6g}")
    _emit(table, _out_dir(args), "fairness.csv")
    return EXIT_OK


def cmd_optimize(args) -> int:
    scenario = _scenario(args)
    optimizer = _optimizer(args).model_copy(update={"operator": args.operator})
    operator = build_operator(args.operator, scenario, optimizer)
    archive = moead.evolve(scenario, optimizer, operator)
    n = scenario.num_vehicles
    W, F = archive.window_matrix(), archive.objective_matrix()
    frame = pd.DataFrame(
        np.hstack([W, F]),
        columns=[f"w{i + 1}" for i in range(n)] + [f"fk{i + 1}" for i in range(n)] + ["fage"],
    )
    selected, index = moead.select_solution(archive, scenario)
    bound = moead.k_bound(F[:, :-1].max(axis=1))
    _emit(frame, _out_dir(args), "archive.csv")
    print(f"K_bound = {bound:.6g}")
    print("selected w* = " + ",".join(f"{w:.3f}" for w in selected) + f"  (F_age = {F[index, -1]:.6g} s)")
    return EXIT_OK


def _sweep_spec(args, variable: str, values) -> SweepSpec:
    return SweepSpec(
        sweep_variable=variable,
        values=tuple(values),
        repetitions=args.trials,
        operators=tuple(args.operator),
        fixed_window_baseline=args.baseline_window,
        optimizer=_optimizer(args),
        master_seed=args.seed,
        workers=args.workers,
    )


def cmd_sweep_velocity(args) -> int:
    scenario = _scenario(args)
    values = _floats(args.values) if args.values else [20, 22, 24, 26, 28, 30]
    spec = _sweep_spec(args, "avg_velocity", values)
    result = sweeps.sweep_velocity(spec, scenario.config)
    out = _out_dir(args)
    _emit(result.rows, out, "sweep_velocity.csv")
    if out is not None:
        _emit(sweeps.summarize(result.rows, "avg_v"), out, "sweep_velocity_summary.csv")
    return _sweep_exit(result)


def cmd_sweep_vehicles(args) -> int:
    scenario = _scenario(args)
    values = [int(v) for v in _floats(args.values)] if args.values else [1, 2, 3, 4, 5, 6]
    spec = _sweep_spec(args, "num_vehicles", values)
    result = sweeps.sweep_vehicles(spec, scenario.config)
    out = _out_dir(args)
    _emit(result.rows, out, "sweep_vehicles.csv")
    if out is not None:
        _emit(sweeps.summarize(result.rows, "n_vehicles"), out, "sweep_vehicles_summary.csv")
    return _sweep_exit(result)


def _sweep_exit(result) -> int:
    for name in result.skipped:
        print(f"notice: operator {name} skipped (not configured)", file=sys.stderr)
    if result.failures:
        print(f"{result.failures} run(s) failed; see the error column", file=sys.stderr)
        return EXIT_PARTIAL_FAILURE
    return EXIT_OK


def cmd_compare_operators(args) -> int:
    scenario = _scenario(args)
    spec = _sweep_spec(args, "avg_velocity", [float(np.mean(scenario.speeds))])
    result = sweeps.compare_operators(spec, scenario)
    for name in result.skipped:
        print(f"notice: operator {name} skipped (not configured)", file=sys.stderr)
    out = _out_dir(args)
    _emit(result.rows, out, "compare_operators.csv")
    print(result.summary.to_string(index=False))
    if out is not None:
        _emit(result.summary, out, "compare_operators_summary.csv")
    return EXIT_OK


def cmd_hv(args) -> int:
    try:
        frame = pd.read_csv(args.archive)
    except FileNotFoundError:
        raise ScenarioError(f"archive: file not found: {args.archive}") from None
    columns = sorted((c for c in frame.columns if c.startswith("fk")), key=lambda c: int(c[2:])) + ["fage"]
    missing = [c for c in columns if c not in frame.columns]
    if missing or len(columns) < 2:
        raise ScenarioError(f"archive: missing objective columns {missing or ['fk1']}")
    points = frame[columns].to_numpy(dtype=float)
    if args.ref == "auto":
        ref = points.max(axis=0) * metrics.REFERENCE_SCALE
    else:
        ref = np.array(_floats(args.ref))
        if ref.size != points.shape[1]:
            raise ScenarioError(f"ref: expected {points.shape[1]} values, got {ref.size}")
    print(f"{metrics.hypervolume(points, ref):.10g}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port)
    return EXIT_OK


# ==================== PARSER ====================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairline", description="Fairness and AoI optimization for NR V2X Mode 2")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="logging level (default from FAIRLINE_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, windows=False, optimizer=False):
        p.add_argument("--scenario", help="scenario JSON file (default: built-in highway scenario)")
        p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
        p.add_argument("--out", help="directory for CSV output (default: print CSV to stdout)")
        p.add_argument("--baseline-window", type=float, default=100.0, help="fixed window in ms")
        if windows:
            p.add_argument("--windows", help="comma-separated window sizes in ms, or one value for all")
        if optimizer:
            p.add_argument("--generations", type=int, default=100)
            p.add_argument("--partitions", type=int, default=7)
            p.add_argument("--neighbors", type=int, default=20)
            p.add_argument("--neighbor-prob", type=float, default=0.8)
            p.add_argument("--llm-parents", type=int, default=2)
            p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("aoi", help="SHS AoI of every link for a window vector")
    common(p, windows=True)
    p.add_argument("--simulate", type=int, default=0, metavar="EVENTS", help="also run the Monte Carlo oracle")
    p.set_defaults(handler=cmd_aoi)

    p = sub.add_parser("fairness", help="per-vehicle fairness index and PRR for a window vector")
    common(p, windows=True)
    p.set_defaults(handler=cmd_fairness)

    p = sub.add_parser("optimize", help="run the optimizer and print the archive")
    common(p, optimizer=True)
    p.add_argument("--operator", choices=OPERATORS, default="sbx")
    p.set_defaults(handler=cmd_optimize)

    for name, handler in (("sweep-velocity", cmd_sweep_velocity), ("sweep-vehicles", cmd_sweep_vehicles)):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} experiment")
        common(p, optimizer=True)
        p.add_argument("--values", help="comma-separated sweep values")
        p.add_argument("--trials", type=int, default=30)
        p.add_argument("--operator", nargs="+", choices=OPERATORS, default=["mock-llm"])
        p.set_defaults(handler=handler)

    p = sub.add_parser("compare-operators", help="per-generation HV for each operator")
    common(p, optimizer=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--operator", nargs="+", choices=OPERATORS, default=["sbx", "mock-llm"])
    p.set_defaults(handler=cmd_compare_operators)

    p = sub.add_parser("hv", help="hypervolume of an archive CSV")
    p.add_argument("--archive", required=True)
    p.add_argument("--ref", default="auto", help="'auto' or comma-separated reference point")
    p.set_defaults(handler=cmd_hv)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default=settings.API_HOST)
    p.add_argument("--port", type=int, default=settings.API_PORT)
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings.configure_logging(args.log_level)
    try:
        return args.handler(args)
    except ScenarioError as exc:
        for violation in exc.violations:
            print(f"error: {violation}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except FairlineError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        # pydantic validation of CLI-built configs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
