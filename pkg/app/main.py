import logging

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .core.errors import FairlineError, ScenarioError
from .core.scenario import check_windows, scenario_from_dict, scenario_to_dict
from .models import aoi, fairness
from .optim import moead
from .optim.registry import build_operator
from .schemas.schemas import (
    AoiResponse,
    ArchiveEntryResponse,
    EvaluateRequest,
    FairnessResponse,
    OptimizeRequest,
    OptimizeResponse,
)

__version__ = "0.1.0"

logger = logging.getLogger(__name__)

app = FastAPI(title="fairline: fairness and AoI optimization for NR V2X Mode 2", version=__version__)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    errors = [f"{error['loc'][-1]}: {error['msg']}" for error in exc.errors()]
    return JSONResponse(status_code=422, content={"detail": "Validation error", "errors": errors})


@app.exception_handler(ScenarioError)
async def scenario_exception_handler(request: Request, exc: ScenarioError):
    return JSONResponse(status_code=400, content={"detail": "Invalid scenario", "errors": exc.violations})


@app.exception_handler(FairlineError)
async def domain_exception_handler(request: Request, exc: FairlineError):
    logger.warning("%s %s failed: %s", request.method, request.url.path, exc.detail)
    return JSONResponse(status_code=400, content={"detail": exc.detail})


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/scenario/validate")
def validate_scenario(raw: dict):
    scenario = scenario_from_dict(raw)
    return scenario_to_dict(scenario)


@app.post("/fairness", response_model=FairnessResponse)
def evaluate_fairness(body: EvaluateRequest):
    scenario = scenario_from_dict(body.scenario)
    windows = check_windows(body.windows, scenario.config)
    report = fairness.fairness_report(windows, scenario)
    return FairnessResponse(
        per_vehicle_index=report.per_vehicle_index.tolist(),
        network_index=report.network_index,
        per_vehicle_prr=report.per_vehicle_prr.tolist(),
        per_pair_collision=report.per_pair_collision.tolist(),
        per_vehicle_deviation=report.per_vehicle_deviation.tolist(),
        expected_bits=report.expected_bits.tolist(),
    )


@app.post("/aoi", response_model=AoiResponse)
def evaluate_aoi(body: EvaluateRequest):
    scenario = scenario_from_dict(body.scenario)
    windows = check_windows(body.windows, scenario.config)
    rates = aoi.build_rates(windows, scenario)
    solution = aoi.solve(rates)
    return AoiResponse(
        H=rates.H.tolist(),
        R=rates.R.tolist(),
        sum_p=rates.preemption_out.tolist(),
        pi=solution.pi.tolist(),
        normalizer=solution.normalizer,
        per_link_aoi=solution.per_link_aoi.tolist(),
        network_aoi=solution.network_aoi,
    )


@app.post("/optimize", response_model=OptimizeResponse)
def optimize(body: OptimizeRequest):
    scenario = scenario_from_dict(body.scenario)
    optimizer = body.optimizer.model_copy(update={"operator": body.operator})
    operator = build_operator(body.operator, scenario, optimizer)
    archive = moead.evolve(scenario, optimizer, operator)
    if len(archive) == 0:
        raise HTTPException(status_code=422, detail="No feasible solution was found")
    F = archive.objective_matrix()
    selected, _ = moead.select_solution(archive, scenario)
    return OptimizeResponse(
        operator=body.operator,
        entries=[ArchiveEntryResponse(windows=w.tolist(), objectives=f.tolist()) for w, f in archive.entries],
        k_bound=moead.k_bound(F[:, :-1].max(axis=1)),
        selected_windows=selected.tolist(),
    )
