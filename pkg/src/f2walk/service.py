"""HTTP service wrapping the experiment pipelines.

POST /run takes the same sectioned configuration a config file holds,
as {section: {key: value}} with optional overrides, runs the pipeline
synchronously, and returns the deterministic report plus CSV-ready
tables.  The CLI is a thin client of this service (in process by
default); file writing stays client-side so the service is stateless.
"""

from __future__ import annotations

from fastapi import FastAPI
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .config import config_from_sections
from .errors import ConfigError
from .experiments import run_experiment
from .reports import jsonable


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sections: dict = Field(default_factory=dict)
    command: str | None = None
    seed: int | None = Field(default=None, ge=0, lt=1 << 64)
    workers: int | None = Field(default=None, ge=1, le=64)


class RunResponse(BaseModel):
    status: str  # ok | check-failed | config-invalid | infra-failed
    exit_code: int
    name: str
    passed: bool
    report: dict
    tables: dict  # table name -> {"header": [...], "rows": [[...]]}


def create_app() -> FastAPI:
    app = FastAPI(title="f2walk", version=__version__)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/version")
    def version() -> dict:
        return {"tool": "f2walk", "version": __version__}

    @app.post("/run", response_model=RunResponse)
    def run(request: RunRequest) -> RunResponse:
        try:
            config = config_from_sections(
                request.sections,
                command=request.command,
                seed=request.seed,
                workers=request.workers,
            )
        except ConfigError as exc:
            return RunResponse(
                status="config-invalid",
                exit_code=3,
                name=request.command or "unknown",
                passed=False,
                report={"error": str(exc), "error_kind": "config-invalid"},
                tables={},
            )
        result = run_experiment(config)
        tables = {
            name: {"header": header, "rows": jsonable(rows)}
            for name, (header, rows) in sorted(result.tables.items())
        }
        return RunResponse(
            status=result.status,
            exit_code=result.exit_code,
            name=result.name,
            passed=result.passed,
            report=jsonable(result.report),
            tables=tables,
        )

    return app


app = create_app()
