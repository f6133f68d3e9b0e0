"""Request/response models for the HTTP service."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from ..config import ExperimentConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class VerifyRequest(_Strict):
    config: ExperimentConfig
    workers: int = Field(default=1, ge=1)


class SimulateRequest(_Strict):
    config: ExperimentConfig
    out_dir: Optional[str] = None  # None returns the CSV bodies inline
    workers: int = Field(default=1, ge=1)


class ConvergenceRequest(_Strict):
    config: ExperimentConfig
    k_values: list[int]
    workers: int = Field(default=1, ge=1)


class LocalTimeCheckRequest(_Strict):
    config: ExperimentConfig
    workers: int = Field(default=1, ge=1)


class ReportResponse(BaseModel):
    passed: bool
    report: dict


class SimulateResponse(BaseModel):
    manifest: dict


class ConvergenceResponse(BaseModel):
    rows: list[dict]
    slope: Optional[float]
    slope_se: Optional[float]
    degenerate: bool
    report: dict


class HealthResponse(BaseModel):
    status: str
    name: str
    version: str
