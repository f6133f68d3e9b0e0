"""FastAPI wrapper around the experiment runners.

The service is stateless: every request carries the full experiment config,
and responses embed the resolved config plus its hash.  Hypothesis/contract
violations map to 409, config errors to 400 (malformed bodies get FastAPI's
own 422).
"""

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import ConfigError
from ..ito import ContractViolation
from ..runner import (run_convergence, run_localtime_check, run_simulate,
                      run_verify)
from .schemas import (ConvergenceRequest, ConvergenceResponse, HealthResponse,
                      LocalTimeCheckRequest, ReportResponse, SimulateRequest,
                      SimulateResponse, VerifyRequest)

app = FastAPI(title="levylab", version=__version__,
              description="Monte Carlo verification of Ito-type formulas "
                          "for functionals of Levy processes.")


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ContractViolation as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok", name="levylab", version=__version__)


@app.post("/verify", response_model=ReportResponse)
def verify(req: VerifyRequest):
    report = _guard(run_verify, req.config, workers=req.workers)
    return ReportResponse(passed=report["passed"], report=report)


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest):
    manifest = _guard(run_simulate, req.config, out_dir=req.out_dir,
                      workers=req.workers)
    return SimulateResponse(manifest=manifest)


@app.post("/convergence", response_model=ConvergenceResponse)
def convergence(req: ConvergenceRequest):
    report = _guard(run_convergence, req.config, req.k_values, workers=req.workers)
    return ConvergenceResponse(rows=report["rows"], slope=report["slope"],
                               slope_se=report["slope_se"],
                               degenerate=report["degenerate"], report=report)


@app.post("/localtime-check", response_model=ReportResponse)
def localtime_check(req: LocalTimeCheckRequest):
    report = _guard(run_localtime_check, req.config, workers=req.workers)
    return ReportResponse(passed=report["passed"], report=report)
