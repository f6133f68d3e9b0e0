"""Experiment configuration: a versioned, strict JSON schema.

Unknown keys are rejected everywhere (a typo in a model block should fail
loudly, not silently fall back to a default), the master seed is mandatory
(no wall-clock entropy), and K is pinned to powers of two so convergence
sweeps halve cleanly.
"""

import hashlib
import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import functional as fn
from . import levy


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class JumpComponentConfig(_Strict):
    rate: float = Field(gt=0)
    distribution: Literal["atom", "gaussian_truncated", "uniform_ball"]
    params: dict


class ModelConfig(_Strict):
    mu: list[float]
    sigma: list[list[float]]  # row-major d x d
    jumps: list[JumpComponentConfig] = []


class FunctionalConfig(_Strict):
    name: str
    params: dict = {}


class RunConfig(_Strict):
    K: int
    M: int = Field(ge=2)
    seed: int
    horizon: float = Field(default=1.0, gt=0)
    t_points: list[float] = []

    @field_validator("K")
    @classmethod
    def _power_of_two(cls, v):
        if v < 2 ** 6 or v > 2 ** 20 or v & (v - 1):
            raise ValueError("K must be a power of two in [2^6, 2^20]")
        return v


class ExperimentConfig(_Strict):
    schema_version: Literal[1] = 1
    model: ModelConfig
    functional: FunctionalConfig
    run: RunConfig
    verifier: Optional[Literal["thm1", "thm3", "thm4", "thm4_invertible"]] = None
    output_dir: Optional[str] = None


# -- parsing -------------------------------------------------------------------


def parse_config(data):
    """dict -> ExperimentConfig with readable error locations."""
    try:
        return ExperimentConfig.model_validate(data)
    except Exception as exc:  # pydantic.ValidationError
        raise ConfigError(str(exc)) from exc


def load_config(path):
    """Read a JSON config file; JSON errors keep their line/column info."""
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(data)


def config_dict(cfg):
    return json.loads(cfg.model_dump_json())


def config_hash(cfg):
    canonical = json.dumps(config_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# -- builders ------------------------------------------------------------------


_JUMP_BUILDERS = {
    "atom": (levy.atom, {"point"}),
    "gaussian_truncated": (levy.gaussian_truncated, {"mean", "sigma", "bound"}),
    "uniform_ball": (levy.uniform_ball, {"center", "radius"}),
}


def build_model(cfg):
    components = []
    for jc in cfg.model.jumps:
        builder, allowed = _JUMP_BUILDERS[jc.distribution]
        unknown = set(jc.params) - allowed
        if unknown:
            raise ConfigError(f"jump component {jc.distribution!r}: unknown params {sorted(unknown)}")
        try:
            components.append(builder(jc.rate, **jc.params))
        except (TypeError, levy.ModelError) as exc:
            raise ConfigError(f"jump component {jc.distribution!r}: {exc}") from exc
    try:
        return levy.LevyModel(cfg.model.mu, cfg.model.sigma, levy.JumpSpec(tuple(components)))
    except levy.ModelError as exc:
        raise ConfigError(str(exc)) from exc


def build_functional(cfg):
    try:
        return fn.make_functional(cfg.functional.name, **cfg.functional.params)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"functional block: {exc}") from exc
