"""FastAPI application wrapping the handlers."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import NumericError, ValidationError
from . import handlers, models


def create_app() -> FastAPI:
    app = FastAPI(
        title="noiselab",
        version=__version__,
        description="Spectral noise-sensitivity toolkit for random walks on Schreier graphs",
    )

    @app.exception_handler(ValidationError)
    async def _validation_error(_: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"kind": "validation", "error": str(exc)})

    @app.exception_handler(NumericError)
    async def _numeric_error(_: Request, exc: NumericError):
        return JSONResponse(status_code=500, content={"kind": "numeric", "error": str(exc)})

    @app.get("/health", response_model=models.HealthResponse)
    def health() -> models.HealthResponse:
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/graph", response_model=models.GraphResponse)
    def graph(req: models.GraphRequest) -> models.GraphResponse:
        return handlers.handle_graph(req)

    @app.post("/spectrum", response_model=models.SpectrumResponse)
    def spectrum(req: models.SpectrumRequest) -> models.SpectrumResponse:
        return handlers.handle_spectrum(req)

    @app.post("/influence", response_model=models.InfluenceResponse)
    def influence(req: models.FunctionRequest) -> models.InfluenceResponse:
        return handlers.handle_influence(req)

    @app.post("/fourier", response_model=models.FourierResponse)
    def fourier(req: models.FunctionRequest) -> models.FourierResponse:
        return handlers.handle_fourier(req)

    @app.post("/cov", response_model=models.CovResponse)
    def cov(req: models.CovRequest) -> models.CovResponse:
        return handlers.handle_cov(req)

    @app.post("/bound", response_model=models.BoundResponse)
    def bound(req: models.BoundRequest) -> models.BoundResponse:
        return handlers.handle_bound(req)

    @app.post("/logsobolev", response_model=models.LogSobolevResponse)
    def logsobolev(req: models.LogSobolevRequest) -> models.LogSobolevResponse:
        return handlers.handle_logsobolev(req)

    @app.post("/eigenspace-check", response_model=models.EigenspaceCheckResponse)
    def eigenspace_check(req: models.EigenspaceCheckRequest) -> models.EigenspaceCheckResponse:
        return handlers.handle_eigenspace_check(req)

    @app.post("/exclusion", response_model=models.ExclusionResponse)
    def exclusion(req: models.ExclusionRequest) -> models.ExclusionResponse:
        return handlers.handle_exclusion(req)

    @app.post("/slice-bound", response_model=models.SliceBoundResponse)
    def slice_bound(req: models.SliceBoundRequest) -> models.SliceBoundResponse:
        return handlers.handle_slice_bound(req)

    @app.post("/simulate", response_model=models.SimulateResponse)
    def simulate(req: models.SimulateRequest) -> models.SimulateResponse:
        return handlers.handle_simulate(req)

    return app
