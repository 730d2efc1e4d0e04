"""FastAPI service exposing the experiment runners.

Each experiment is one POST endpoint taking the full experiment config
as the request body and returning the result table as JSON.  Config
problems map to HTTP 400 (or 422 from schema validation) with
``kind="config"``; solver failures map to HTTP 500 with
``kind="solver"``.
"""

from __future__ import annotations

from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .config import ConfigError, ExperimentConfig
from .experiments import (
    Table,
    run_bloch_sweep,
    run_floquet,
    run_pulse,
    run_spectrum,
    run_tau_sweep,
    run_zeno_report,
)
from .lindblad import SolverError


class TablePayload(BaseModel):
    columns: list[str]
    rows: list[list[float | int | bool | str | None]]


class RunResponse(BaseModel):
    config: dict
    table: TablePayload
    trace: TablePayload | None = None
    any_failed: bool = False


class HealthResponse(BaseModel):
    status: str
    version: str


def _payload(table: Table) -> TablePayload:
    return TablePayload(columns=list(table.columns), rows=[list(r) for r in table.rows])


def _response(table: Table, trace: Table | None = None) -> RunResponse:
    return RunResponse(
        config=table.config,
        table=_payload(table),
        trace=_payload(trace) if trace is not None else None,
        any_failed=table.any_failed,
    )


app = FastAPI(title="qmcurrents", version=__version__)


@app.exception_handler(ConfigError)
async def _config_error(_: Request, exc: ConfigError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": {"kind": "config", "message": str(exc)}})


@app.exception_handler(SolverError)
async def _solver_error(_: Request, exc: SolverError) -> JSONResponse:
    return JSONResponse(status_code=500, content={"detail": {"kind": "solver", "message": str(exc)}})


@app.get("/v1/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


def _simple_endpoint(runner: Callable[[ExperimentConfig], Table]):
    def endpoint(config: ExperimentConfig) -> RunResponse:
        return _response(runner(config))

    return endpoint


app.post("/v1/spectrum", response_model=RunResponse)(_simple_endpoint(run_spectrum))
app.post("/v1/pulse", response_model=RunResponse)(_simple_endpoint(run_pulse))
app.post("/v1/bloch-sweep", response_model=RunResponse)(_simple_endpoint(run_bloch_sweep))
app.post("/v1/tau-sweep", response_model=RunResponse)(_simple_endpoint(run_tau_sweep))
app.post("/v1/zeno-report", response_model=RunResponse)(_simple_endpoint(run_zeno_report))


@app.post("/v1/floquet", response_model=RunResponse)
def floquet(config: ExperimentConfig) -> RunResponse:
    table, trace = run_floquet(config)
    return _response(table, trace)
