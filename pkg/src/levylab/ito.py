"""Term-by-term Monte Carlo verification of the change-of-variables formulas.

Three verifiers share one per-path engine:

* continuous case (C^{1,2} functional of a continuous semimartingale):
  horizontal + gradient-against-dX + half-trace-Hessian terms;
* pointwise C^1 function of a multivariate Levy process (possibly singular
  covariance): the local-time representation replaces the Hessian;
* the optimal functional formula (C^{1,1} path functional): same structure
  with vertical perturbations of the stopped path.

Discretization conventions, chosen so that every exact identity survives the
grid: time integrals are left-endpoint Riemann sums (exact for integrands of
step paths), stochastic sums are left-point Ito sums, jump terms use the
exact jump sizes (jump times are knots), and the local-time term is the
collapsed forward/backward pair from :mod:`levylab.localtime`.

The local-time integrand's path slice is anchored to the pre-jump path
state: the frozen path's terminal at slice coordinate z is
X(s-) + sigma^{1/2} (z - B(s)), so at z = B(s) the slice sits exactly on the
left-stopped path and the drift-plus-jump content of X(s-), which is
independent of the Brownian component, rides along.  This keeps the
representation's independence hypothesis intact and makes the functional
formula reduce bitwise to the pointwise one on terminal functionals.
"""

from dataclasses import dataclass, field

import numpy as np

from .functional import FunctionalHandle, class_at_least, terminal_functional
from .levy import check_drift_condition, simulate, spectral
from .mc import ensemble_mean_se, ensemble_rms, parallel_map, path_seed
from .operators import OperatorContext

ANCHOR_NOTE = ("sigma_half_relative: slice terminal X(s-) + sigma^{1/2}(z - B(s)); "
               "drift+jump state rides along, slice sits on the left-stopped path at z = B(s)")

THM1_TERMS = ("horizontal", "stochastic", "quadratic_variation")
LEVY_TERMS = ("horizontal", "drift", "brownian", "big_jump",
              "small_jump_compensated", "local_time", "nu_correction")


class ContractViolation(RuntimeError):
    """The verifier's hypotheses are not met by the supplied inputs."""


@dataclass
class TermStat:
    mean: float
    se: float


@dataclass
class ItoResidualReport:
    formula: str
    n_steps: int
    n_paths: int
    seed: int
    horizon: float
    t_eval: float
    terms: dict
    lhs: TermStat
    rhs_mean: float
    residual_mean: float
    residual_se: float
    residual_rms: float
    metadata: dict
    per_path_residuals: np.ndarray = field(repr=False, default=None)
    per_path_terms: dict = field(repr=False, default=None)
    per_path_lhs: np.ndarray = field(repr=False, default=None)

    def traces_to_csv(self, fileobj=None):
        """Per-path term values as CSV rows (path_id, term, value)."""
        import csv
        import io
        own = fileobj is None
        if own:
            fileobj = io.StringIO()
        w = csv.writer(fileobj, lineterminator="\n")
        w.writerow(["path_id", "term", "value"])
        for name, arr in self.per_path_terms.items():
            for i, v in enumerate(arr):
                w.writerow([i, name, repr(float(v))])
        for i, v in enumerate(self.per_path_lhs):
            w.writerow([i, "lhs", repr(float(v))])
        for i, v in enumerate(self.per_path_residuals):
            w.writerow([i, "residual", repr(float(v))])
        return fileobj.getvalue() if own else None

    def to_dict(self):
        return {
            "schema_version": 1,
            "formula": self.formula,
            "n_steps": self.n_steps,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "horizon": self.horizon,
            "t_eval": self.t_eval,
            "terms": {k: {"mean": v.mean, "se": v.se} for k, v in self.terms.items()},
            "lhs": {"mean": self.lhs.mean, "se": self.lhs.se},
            "rhs_mean": self.rhs_mean,
            "residual": {"mean": self.residual_mean, "se": self.residual_se,
                         "rms": self.residual_rms},
            "metadata": self.metadata,
        }


# -- kernel helpers -----------------------------------------------------------------


def _kernel_grad(kern, state, W, h=1e-6):
    if kern.has_grad:
        return np.asarray(kern.grad(state, W), dtype=float)
    W = np.atleast_2d(W)
    out = np.empty_like(W)
    for i in range(W.shape[1]):
        e = np.zeros(W.shape[1])
        e[i] = h
        out[:, i] = (kern.f(state, W + e) - kern.f(state, W - e)) / (2.0 * h)
    return out


def _kernel_hess(kern, state, W, h=1e-4):
    if kern.has_hess:
        return np.asarray(kern.hess(state, W), dtype=float)
    W = np.atleast_2d(W)
    n, d = W.shape
    out = np.empty((n, d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        gp = _kernel_grad(kern, state, W + e)
        gm = _kernel_grad(kern, state, W - e)
        out[:, :, i] = (gp - gm) / (2.0 * h)
    return 0.5 * (out + np.transpose(out, (0, 2, 1)))


# -- per-path term evaluation ----------------------------------------------------------


def _thm1_path(F, model, decomp, n_steps, seed, horizon, t_eval):
    sim = simulate(model, n_steps, seed, horizon, decomp)
    kern, state = F.bound_kernel(sim.X)
    k_t = sim.grid.index_at(t_eval)
    knots = sim.grid.knots
    dtc = np.diff(knots)[:k_t]
    Xv = sim.X.values
    F_stop = kern.f(state, Xv)
    grad_stop = _kernel_grad(kern, state, Xv)
    DF = kern.df_dt(state, Xv)
    dX = np.diff(Xv, axis=0)[:k_t]
    H = _kernel_hess(kern, state, Xv)
    trace = np.einsum("kij,ji->k", H[:k_t], model.sigma)
    terms = {
        "horizontal": float(np.dot(DF[:k_t], dtc)),
        "stochastic": float(np.einsum("kd,kd->", grad_stop[:k_t], dX)),
        "quadratic_variation": 0.5 * float(np.dot(trace, dtc)),
    }
    lhs = float(F_stop[k_t] - F_stop[0])
    return lhs, terms


def _levy_path(F, model, decomp, ctx, n_steps, seed, horizon, t_eval):
    sim = simulate(model, n_steps, seed, horizon, decomp)
    kern, state = F.bound_kernel(sim.X)
    k_t = sim.grid.index_at(t_eval)
    knots = sim.grid.knots
    dtc = np.diff(knots)[:k_t]
    rows = np.arange(k_t)
    Xv = sim.X.values
    Xleft = sim.pre_jump_X()

    F_stop = kern.f(state, Xv)
    grad_stop = _kernel_grad(kern, state, Xv)
    DF = kern.df_dt(state, Xv)

    m = decomp.rank
    terms = {name: 0.0 for name in LEVY_TERMS}
    terms["horizontal"] = float(np.dot(DF[:k_t], dtc))
    terms["drift"] = float(np.dot(grad_stop[:k_t] @ model.mu, dtc))

    dB = np.diff(sim.B.values, axis=0) if m else None
    if m:
        gs = grad_stop[:k_t] @ decomp.sigma_half
        terms["brownian"] = float(np.einsum("km,km->", gs, dB[:k_t]))

    small_realized = 0.0
    if sim.jump_indices.size:
        sel = sim.jump_indices <= k_t
        J = sim.jump_indices[sel]
        small_mask = sim.jump_small[sel]
        F_left_rows = kern.f(state, Xleft[J], idx=J)
        diffs = F_stop[J] - F_left_rows
        terms["big_jump"] = float(diffs[~small_mask].sum())
        small_realized = float(diffs[small_mask].sum())

    nodes, wnu = model.nu.small_nodes()
    compensator = 0.0
    correction = 0.0
    if nodes.size:
        IQ = np.eye(model.dimension) - decomp.Q
        for yq, wq in zip(nodes, wnu):
            Fq = kern.f(state, Xv[:k_t] + yq, idx=rows)
            compensator += wq * float(np.dot(Fq - F_stop[:k_t], dtc))
            Fq_proj = kern.f(state, Xv[:k_t] + decomp.Q @ yq, idx=rows)
            lin = grad_stop[:k_t] @ (IQ @ yq)
            correction += wq * float(np.dot(Fq - Fq_proj - lin, dtc))
    terms["small_jump_compensated"] = small_realized - compensator
    terms["nu_correction"] = correction

    if m:
        # G[k, j] = op_AI of the frozen-path slice at coordinate j, knot k.
        F_left = kern.f(state, Xleft)
        grad_left = _kernel_grad(kern, state, Xleft)
        G = 0.5 * (grad_left @ decomp.sigma_half)
        if nodes.size:
            Ry, Qy = ctx.mapped_jumps()
            for q, wq in enumerate(wnu):
                inner = np.zeros(knots.size)
                for u, wu in zip(ctx.u_nodes, ctx.u_weights):
                    inner += wu * (kern.f(state, Xleft + u * Qy[q]) - F_left)
                G += wq * np.outer(inner, Ry[q])
        dG = G[1:k_t + 1] - G[:k_t]
        # RHS carries -sum_j (fb sum)_j and each fb sum is -sum dG dB.
        terms["local_time"] = float(np.einsum("km,km->", dG, dB[:k_t]))

    lhs = float(F_stop[k_t] - F_stop[0])
    return lhs, terms


# -- ensemble assembly -------------------------------------------------------------------


def _assemble(formula, term_names, model, n_steps, n_paths, seed, horizon,
              t_eval, workers, path_fn, metadata):
    rows = parallel_map(path_fn, n_paths, workers)
    lhs = np.array([r[0] for r in rows])
    per_term = {name: np.array([r[1][name] for r in rows]) for name in term_names}
    rhs = np.zeros(n_paths)
    for name in term_names:
        rhs = rhs + per_term[name]
    residual = lhs - rhs
    terms = {name: TermStat(*ensemble_mean_se(per_term[name])) for name in term_names}
    lhs_stat = TermStat(*ensemble_mean_se(lhs))
    res_mean, res_se = ensemble_mean_se(residual)
    return ItoResidualReport(
        formula=formula, n_steps=n_steps, n_paths=n_paths, seed=int(seed),
        horizon=float(horizon), t_eval=float(t_eval),
        terms=terms, lhs=lhs_stat,
        rhs_mean=float(sum(t.mean for t in terms.values())),
        residual_mean=res_mean, residual_se=res_se,
        residual_rms=ensemble_rms(residual),
        metadata=metadata,
        per_path_residuals=residual, per_path_terms=per_term, per_path_lhs=lhs)


def _snap_t(model, n_steps, horizon, t):
    # evaluation times snap to the largest uniform knot <= t; jump knots are
    # path-specific, so only the shared uniform grid is a valid target.
    if t is None:
        return float(horizon)
    if not 0.0 <= t <= horizon:
        raise ContractViolation(f"evaluation time {t} outside [0, {horizon}]")
    base = np.linspace(0.0, horizon, n_steps + 1)
    return float(base[np.searchsorted(base, t + 1e-12) - 1]) if t > 0 else 0.0


def verify_thm1(F, model, n_steps, n_paths, seed, horizon=1.0, t=None, workers=1):
    """Continuous-case functional formula: requires nu = 0 and F in C^{1,2}."""
    if not model.nu.is_empty:
        raise ContractViolation("the continuous-case formula needs a jump-free model")
    if not class_at_least(F.declared_class, "C12"):
        raise ContractViolation(
            f"functional {F.name!r} declared {F.declared_class}; C12 required")
    decomp = spectral(model.sigma)
    t_eval = _snap_t(model, n_steps, horizon, t)

    def path_fn(i):
        return _thm1_path(F, model, decomp, n_steps, path_seed(seed, i), horizon, t_eval)

    meta = {"rank": decomp.rank, "functional": F.name,
            "seed_scheme": "master xor path_index"}
    return _assemble("thm1", THM1_TERMS, model, n_steps, n_paths, seed, horizon,
                     t_eval, workers, path_fn, meta)


def _verify_levy(formula, F, model, n_steps, n_paths, seed, horizon, t, workers):
    decomp = spectral(model.sigma)
    drift = check_drift_condition(model, decomp)
    if not drift.finite:
        raise ContractViolation("drift condition integral diverges")
    ctx = OperatorContext.from_model(model, decomp)
    t_eval = _snap_t(model, n_steps, horizon, t)

    def path_fn(i):
        return _levy_path(F, model, decomp, ctx, n_steps, path_seed(seed, i),
                          horizon, t_eval)

    meta = {"rank": decomp.rank, "functional": F.name,
            "drift_condition_value": drift.value,
            "perturbation_anchor": ANCHOR_NOTE,
            "seed_scheme": "master xor path_index"}
    return _assemble(formula, LEVY_TERMS, model, n_steps, n_paths, seed, horizon,
                     t_eval, workers, path_fn, meta)


def verify_thm3(f, model, n_steps, n_paths, seed, horizon=1.0, t=None, workers=1):
    """Pointwise C^1 function of a Levy process, via the functional engine.

    f is a registered point-function name or a terminal-type
    FunctionalHandle; the optimal functional formula specializes to the
    pointwise one on such functionals, so both verifiers share each term
    bitwise (which is itself one of the verified claims).
    """
    F = terminal_functional(f) if isinstance(f, str) else f
    if not class_at_least(F.declared_class, "C11"):
        raise ContractViolation(f"f must be at least C^1; got {F.declared_class}")
    return _verify_levy("thm3", F, model, n_steps, n_paths, seed, horizon, t, workers)


def verify_thm4(F, model, n_steps, n_paths, seed, horizon=1.0, t=None, workers=1):
    """Optimal functional formula: F in C^{1,1}, finite drift condition."""
    if not class_at_least(F.declared_class, "C11"):
        raise ContractViolation(
            f"functional {F.name!r} declared {F.declared_class}; C11 required")
    return _verify_levy("thm4", F, model, n_steps, n_paths, seed, horizon, t, workers)


def verify_thm4_invertible(F, model, n_steps, n_paths, seed, horizon=1.0, t=None,
                           workers=1):
    """Full-rank specialization: Q = I, so the correction terms must vanish."""
    decomp = spectral(model.sigma)
    if not decomp.full_rank:
        raise ContractViolation("sigma is singular; the specialization needs full rank")
    report = verify_thm4(F, model, n_steps, n_paths, seed, horizon, t, workers)
    report.formula = "thm4_invertible"
    corr = report.per_path_terms["nu_correction"]
    if np.any(corr != 0.0):
        raise RuntimeError("nu correction did not vanish for an invertible sigma")
    drift = check_drift_condition(model, decomp)
    if drift.value != 0.0:
        raise RuntimeError("drift-condition value nonzero for an invertible sigma")
    report.metadata["invertible_checks"] = {
        "nu_correction_identically_zero": True,
        "drift_condition_value": drift.value,
    }
    return report


def orthogonal_split(report):
    """Martingale vs orthogonal parts of the right-hand side.

    The martingale part collects the Brownian integral and the compensated
    small-jump integral; everything else is the explicit orthogonal
    component.  Their means add back to rhs_mean by construction.
    """
    if report.formula not in ("thm3", "thm4", "thm4_invertible"):
        raise ContractViolation(f"no orthogonal split for formula {report.formula!r}")
    mart = report.terms["brownian"].mean + report.terms["small_jump_compensated"].mean
    orth = (report.terms["horizontal"].mean + report.terms["drift"].mean
            + report.terms["big_jump"].mean + report.terms["local_time"].mean
            + report.terms["nu_correction"].mean)
    return {"martingale_part": float(mart), "orthogonal_part": float(orth),
            "rhs_mean": report.rhs_mean}
