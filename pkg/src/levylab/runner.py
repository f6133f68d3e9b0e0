"""Config-driven entry points shared by the CLI and the HTTP service.

Every runner returns a JSON-ready dict embedding the resolved config and its
content hash, so any number in a report can be reproduced from the report
alone.  Nothing here reads the clock or global RNG state: identical
(config, seed) means byte-identical output.
"""

import json

import numpy as np

from . import localtime as lt
from .config import (ConfigError, build_functional, build_model, config_dict,
                     config_hash)
from .ito import (ContractViolation, verify_thm1, verify_thm3, verify_thm4,
                  verify_thm4_invertible)
from .levy import simulate
from .mc import parallel_map, path_seed
from .paths import path_to_csv

#: |mean| below this counts as zero even when 3*SE is smaller still; exact
#: telescoping cases produce residuals at float-reassociation scale where
#: the SE itself is rounding noise.
ZERO_FLOOR = 1e-10

TERMINAL_FUNCTIONALS = {"terminal", "quadratic", "linear", "terminal_identity"}


def _zero_verdict(mean, se):
    return bool(abs(mean) <= max(3.0 * se, ZERO_FLOOR))


def _base_payload(cfg):
    return {"schema_version": 1, "config": config_dict(cfg), "config_hash": config_hash(cfg)}


# -- verify ---------------------------------------------------------------------


def _dispatch_verifier(cfg, workers):
    model = build_model(cfg)
    run = cfg.run
    t = run.t_points[0] if run.t_points else None
    common = dict(n_steps=run.K, n_paths=run.M, seed=run.seed,
                  horizon=run.horizon, t=t, workers=workers)
    if cfg.verifier == "thm1":
        return verify_thm1(build_functional(cfg), model, **common)
    if cfg.verifier == "thm3":
        if cfg.functional.name not in TERMINAL_FUNCTIONALS:
            raise ContractViolation(
                f"the pointwise formula needs a terminal functional, got {cfg.functional.name!r}")
        return verify_thm3(build_functional(cfg), model, **common)
    if cfg.verifier == "thm4":
        return verify_thm4(build_functional(cfg), model, **common)
    if cfg.verifier == "thm4_invertible":
        return verify_thm4_invertible(build_functional(cfg), model, **common)
    raise ConfigError(f"config has no usable verifier tag (got {cfg.verifier!r})")


def run_verify(cfg, workers=1, traces=False):
    report = _dispatch_verifier(cfg, workers)
    payload = _base_payload(cfg)
    payload.update(report.to_dict())
    payload["verdict"] = {
        "residual_zero": _zero_verdict(report.residual_mean, report.residual_se),
        "rule": f"|mean| <= max(3*SE, {ZERO_FLOOR:g})",
    }
    payload["passed"] = payload["verdict"]["residual_zero"]
    if traces:
        payload["traces_csv"] = report.traces_to_csv()
    return payload


# -- simulate -------------------------------------------------------------------


def run_simulate(cfg, out_dir=None, workers=1):
    model = build_model(cfg)
    run = cfg.run

    def one(i):
        sim = simulate(model, run.K, path_seed(run.seed, i), run.horizon)
        return path_to_csv(sim.X)

    csvs = parallel_map(one, run.M, workers)
    names = [f"path_{i:05d}.csv" for i in range(run.M)]
    payload = _base_payload(cfg)
    payload.update({"seed": run.seed, "n_paths": run.M, "n_steps": run.K,
                    "files": names})
    if out_dir is not None:
        import os
        os.makedirs(out_dir, exist_ok=True)
        for name, text in zip(names, csvs):
            with open(os.path.join(out_dir, name), "w", newline="") as fh:
                fh.write(text)
        with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
    else:
        payload["inline_files"] = dict(zip(names, csvs))
    return payload


# -- convergence ----------------------------------------------------------------


def run_convergence(cfg, k_values, workers=1):
    k_values = sorted(int(k) for k in k_values)
    if len(k_values) < 3:
        raise ConfigError("a convergence sweep needs at least 3 values of K")
    rows = []
    for k in k_values:
        sub = cfg.model_copy(deep=True)
        sub.run.K = k
        report = _dispatch_verifier(sub, workers)
        rows.append({"K": k, "residual_rms": report.residual_rms,
                     "residual_se": report.residual_se})
    payload = _base_payload(cfg)
    payload["rows"] = rows
    rms = np.array([r["residual_rms"] for r in rows])
    if np.any(rms <= 1e-14):
        payload.update({"slope": None, "slope_se": None, "degenerate": True})
        return payload
    x = np.log(np.asarray(k_values, dtype=float))
    y = np.log(rms)
    n = x.size
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    sigma2 = float((resid ** 2).sum() / max(n - 2, 1))
    payload.update({"slope": slope, "slope_se": float(np.sqrt(sigma2 / sxx)),
                    "degenerate": False})
    return payload


# -- local-time oracle triangle ---------------------------------------------------


def _lt_integrand(name, params):
    if name in ("one", "constant"):
        g = lt.space_integrand(lambda X: np.ones(X.shape[0]),
                               dg={0: lambda X: np.zeros(X.shape[0])}, name="1")
        return g
    if name in ("x", "coordinate"):
        return lt.coordinate_integrand(0)
    if name == "sin":
        return lt.space_integrand(lambda X: np.sin(X[:, 0]),
                                  dg={0: lambda X: np.cos(X[:, 0])}, name="sin")
    if name == "half_square":
        return lt.space_integrand(lambda X: 0.5 * X[:, 0] ** 2,
                                  dg={0: lambda X: X[:, 0]}, name="x^2/2")
    raise ConfigError(f"unknown local-time integrand {name!r}; "
                      "available: one, x, sin, half_square")


def run_localtime_check(cfg, workers=1):
    model = build_model(cfg)
    params = dict(cfg.functional.params)
    surface_oracle = bool(params.pop("surface_oracle", False))
    if model.dimension != 1 or not model.nu.is_empty:
        what = "with a surface oracle " if surface_oracle else ""
        raise ContractViolation(
            f"the local-time check {what}needs a 1-d Brownian model "
            f"(d={model.dimension}, jump components: {len(model.nu.components)})")
    F = _lt_integrand(cfg.functional.name, params)
    run = cfg.run

    def one(i):
        return simulate(model, run.K, path_seed(run.seed, i), run.horizon).B

    paths = parallel_map(one, run.M, workers)
    fb = lt.forward_backward_integral(F, None, paths)
    ident = lt.derivative_identity_integral(F, None, paths)
    estimates = {"forward_backward": fb, "derivative_identity": ident}
    if surface_oracle:
        estimates["simple_formula"] = lt.simple_oracle_estimate(F, paths)

    def as_dict(est):
        return {"value": est.value, "std_error": est.std_error, "method": est.method,
                "K": est.n_steps, "M": est.n_paths, "seed": run.seed}

    pair_checks = {}
    names = list(estimates)
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            ea, eb = estimates[names[a]], estimates[names[b]]
            diff = abs(ea.value - eb.value)
            tol = max(3.0 * float(np.hypot(ea.std_error, eb.std_error)), ZERO_FLOOR)
            pair_checks[f"{names[a]} vs {names[b]}"] = {
                "difference": diff, "tolerance": tol, "passed": bool(diff <= tol)}
    payload = _base_payload(cfg)
    payload["estimates"] = {k: as_dict(v) for k, v in estimates.items()}
    payload["pairs"] = pair_checks
    payload["passed"] = all(p["passed"] for p in pair_checks.values())
    return payload


def dumps_report(payload):
    """Canonical byte form of a report (sorted keys, repr floats)."""
    return json.dumps(payload, sort_keys=True, indent=2)
