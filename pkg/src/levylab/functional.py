"""Non-anticipative path functionals and their horizontal/space derivatives.

Two evaluation layers coexist:

* the generic layer: ``F(t, path)`` on real :class:`~levylab.paths.CadlagPath`
  objects, used by the probing/diagnostic operations in this module;
* an optional vectorized kernel that evaluates F simultaneously on all
  "stopped variants" of one base path (same history up to knot k, terminal
  value overridden), which is what the Ito verifiers hammer on.

Catalog functionals ship both layers plus analytic derivatives; arbitrary
user functionals fall back to a slow but correct generic kernel.
"""

from dataclasses import dataclass

import numpy as np

from .paths import CadlagPath, PathError, perturb, stop_at

CLASS_ORDER = {"C00": 0, "C01": 1, "C11": 2, "C12": 3}


def class_at_least(declared, required):
    return CLASS_ORDER[declared] >= CLASS_ORDER[required]


@dataclass
class DerivativeEstimate:
    """A numerical (or analytic) derivative with its step diagnostics."""

    value: object
    step_used: float
    order: str  # forward_1st | central_2nd | richardson | analytic
    error_indicator: float
    one_sided: tuple = None
    non_differentiable: bool = False


@dataclass
class NonAnticipativityReport:
    max_discrepancy: float
    tol: float
    n_probes: int

    @property
    def passed(self):
        return self.max_discrepancy <= self.tol


class TerminalKernel:
    """Vectorized evaluation of F over stopped variants of one path.

    ``prepare(path)`` summarizes the path's history once; ``f(state, W, idx)``
    then returns F(t_k, variant_k) for each row, where variant_k keeps the
    path's values strictly before knot ``idx[r]`` and holds ``W[r]`` from that
    knot on.  ``grad``/``df_dt``/``hess`` follow the same convention.
    """

    def __init__(self, prepare, f, grad=None, df_dt=None, hess=None):
        self._prepare = prepare
        self._f = f
        self._grad = grad
        self._df_dt = df_dt
        self._hess = hess

    def prepare(self, path):
        state = {"t": path.grid.knots, "path": path}
        state.update(self._prepare(path) if self._prepare else {})
        return state

    @staticmethod
    def _resolve(state, idx):
        if idx is None:
            return np.arange(state["t"].size)
        return np.atleast_1d(np.asarray(idx, dtype=int))

    def f(self, state, W, idx=None):
        idx = self._resolve(state, idx)
        return self._f(state, np.atleast_2d(W), idx)

    @property
    def has_grad(self):
        return self._grad is not None

    def grad(self, state, W, idx=None):
        if self._grad is None:
            raise PathError("kernel has no gradient form; add one or use the "
                            "generic fallback kernel")
        idx = self._resolve(state, idx)
        return self._grad(state, np.atleast_2d(W), idx)

    def df_dt(self, state, W, idx=None):
        if self._df_dt is None:
            raise PathError("kernel has no horizontal-derivative form; add one "
                            "or use the generic fallback kernel")
        idx = self._resolve(state, idx)
        return self._df_dt(state, np.atleast_2d(W), idx)

    @property
    def has_hess(self):
        return self._hess is not None

    def hess(self, state, W, idx=None):
        if self._hess is None:
            raise PathError("kernel has no Hessian form")
        idx = self._resolve(state, idx)
        return self._hess(state, np.atleast_2d(W), idx)


DEFAULT_SPACE_STEP = 1e-4
DEFAULT_TIME_STEP = 1e-4


class FunctionalHandle:
    """A non-anticipative functional F(t, x_{^t}) with optional extras."""

    def __init__(self, evaluator, name="functional", analytic_DF=None,
                 analytic_grad=None, analytic_hessian=None,
                 declared_class="C00", kernel=None):
        if declared_class not in CLASS_ORDER:
            raise ValueError(f"unknown regularity class {declared_class!r}")
        self.evaluator = evaluator
        self.name = name
        self.analytic_DF = analytic_DF
        self.analytic_grad = analytic_grad
        self.analytic_hessian = analytic_hessian
        self.declared_class = declared_class
        self.kernel = kernel

    def __call__(self, t, path):
        return float(self.evaluator(t, path))

    def bound_kernel(self, path):
        """Kernel (generic fallback if none) prepared on this path."""
        kern = self.kernel if self.kernel is not None else generic_kernel(self)
        return kern, kern.prepare(path)

    def __repr__(self):
        return f"FunctionalHandle({self.name!r}, class={self.declared_class})"


# -- numeric derivatives -------------------------------------------------------


def _space_scale(x, t):
    return max(1.0, float(np.abs(x.value_at(t)).max()))


def horizontal_derivative(F, t, x, h0=None):
    """One-sided forward time derivative at (t, x_{^t}), Richardson over h, h/2.

    The defining limit is h -> 0+, so no central scheme is used; t must lie
    strictly before the horizon.
    """
    T = x.horizon
    if not 0.0 <= t < T:
        raise PathError(f"horizontal derivative needs t in [0, T); got t={t}")
    xs = stop_at(x, t)
    if F.analytic_DF is not None:
        return DerivativeEstimate(float(F.analytic_DF(t, xs)),
                                  step_used=h0 or DEFAULT_TIME_STEP * max(1.0, T),
                                  order="analytic", error_indicator=0.0)
    h = min(h0 or DEFAULT_TIME_STEP * max(1.0, T), T - t)
    f0 = F(t, xs)
    d_h = (F(t + h, xs) - f0) / h
    d_h2 = (F(t + h / 2, xs) - f0) / (h / 2)
    return DerivativeEstimate(2.0 * d_h2 - d_h, step_used=h, order="richardson",
                              error_indicator=abs(d_h2 - d_h))


def space_derivative(F, i, t, x, h0=None, kink_rtol=1e-2):
    """Central difference in the i-th vertical direction with Richardson.

    One-sided candidates are always computed; when they disagree beyond
    kink_rtol (relative) the estimate is flagged non_differentiable instead
    of silently averaging across a kink.
    """
    if not 0 <= i < x.dimension:
        raise PathError(f"coordinate {i} out of range")
    if F.analytic_grad is not None:
        g = np.asarray(F.analytic_grad(t, stop_at(x, t)), dtype=float)
        return DerivativeEstimate(float(g[i]), step_used=h0 or DEFAULT_SPACE_STEP,
                                  order="analytic", error_indicator=0.0)
    h = h0 or DEFAULT_SPACE_STEP * _space_scale(x, t)
    e = np.zeros(x.dimension)
    e[i] = 1.0

    def df(step):
        up = F(t, perturb(x, t, step * e))
        dn = F(t, perturb(x, t, -step * e))
        return (up - dn) / (2.0 * step)

    d_h, d_h2 = df(h), df(h / 2)
    value = (4.0 * d_h2 - d_h) / 3.0
    f0 = F(t, stop_at(x, t))
    fwd = (F(t, perturb(x, t, h * e)) - f0) / h
    bwd = (f0 - F(t, perturb(x, t, -h * e))) / h
    scale = max(1.0, abs(fwd), abs(bwd))
    kink = abs(fwd - bwd) > kink_rtol * scale and abs(fwd - bwd) > 100.0 * h
    return DerivativeEstimate(value, step_used=h, order="richardson",
                              error_indicator=abs(d_h2 - d_h),
                              one_sided=(bwd, fwd), non_differentiable=kink)


def gradient(F, t, x, h0=None):
    if F.analytic_grad is not None:
        g = np.asarray(F.analytic_grad(t, stop_at(x, t)), dtype=float)
        return DerivativeEstimate(g, step_used=h0 or DEFAULT_SPACE_STEP,
                                  order="analytic", error_indicator=0.0)
    parts = [space_derivative(F, i, t, x, h0=h0) for i in range(x.dimension)]
    return DerivativeEstimate(np.array([p.value for p in parts]),
                              step_used=parts[0].step_used, order="richardson",
                              error_indicator=max(p.error_indicator for p in parts),
                              non_differentiable=any(p.non_differentiable for p in parts))


def hessian(F, t, x, h0=None):
    """Nested central differences, symmetrized; error_indicator = asymmetry."""
    d = x.dimension
    if F.analytic_hessian is not None:
        H = np.asarray(F.analytic_hessian(t, stop_at(x, t)), dtype=float)
        return DerivativeEstimate(0.5 * (H + H.T), step_used=h0 or 1e-3,
                                  order="analytic", error_indicator=float(np.abs(H - H.T).max()))
    h = h0 or 1e-3 * _space_scale(x, t)
    eye = np.eye(d)
    f0 = F(t, stop_at(x, t))

    def fv(vec):
        return F(t, perturb(x, t, vec))

    H = np.empty((d, d))
    for i in range(d):
        H[i, i] = (fv(h * eye[i]) - 2.0 * f0 + fv(-h * eye[i])) / h ** 2
        for j in range(i + 1, d):
            H[i, j] = (fv(h * (eye[i] + eye[j])) - fv(h * (eye[i] - eye[j]))
                       - fv(h * (eye[j] - eye[i])) + fv(-h * (eye[i] + eye[j]))) / (4.0 * h ** 2)
            H[j, i] = H[i, j]
    asym = float(np.abs(H - H.T).max())
    return DerivativeEstimate(0.5 * (H + H.T), step_used=h, order="central_2nd",
                              error_indicator=asym)


def check_nonanticipative(F, probe_set, tol_na=1e-12):
    """Max |F(t, x) - F(t, x_{^t})| over probes (t, x)."""
    worst = 0.0
    for t, x in probe_set:
        worst = max(worst, abs(F(t, x) - F(t, stop_at(x, t))))
    return NonAnticipativityReport(worst, tol_na, len(probe_set))


def check_boundedness_preserving(F, probe_set, box_radius):
    """Diagnostic: sup of |F(s, x_{^s})| over probes confined to a box.

    Probes whose values leave the sup-norm ball of the given radius are
    skipped; the reported bound is evidence of boundedness preservation on
    that compact set, never a proof.
    """
    bound = 0.0
    used = 0
    for t, x in probe_set:
        k = x.grid.index_at(t)
        if np.abs(x.values[:k + 1]).max() > box_radius:
            continue
        used += 1
        for s in x.grid.knots[:k + 1]:
            bound = max(bound, abs(F(s, stop_at(x, s))))
    return {"bound": bound, "box_radius": float(box_radius),
            "probes_used": used, "finite": np.isfinite(bound)}


def check_fixed_time_continuity(F, t, x, deltas=(1e-1, 1e-2, 1e-3), n_dirs=8,
                                seed=0):
    """Diagnostic: modulus of continuity of F(t, .) at the stopped path.

    Perturbs the terminal value in random directions of each sup-norm size
    and reports max |F(t, x^h) - F(t, x)| per delta; the probe detects
    fixed-time discontinuities, it cannot certify continuity.
    """
    rng = np.random.default_rng(seed)
    base = F(t, stop_at(x, t))
    moduli = {}
    for delta in sorted(deltas, reverse=True):
        worst = 0.0
        for _ in range(n_dirs):
            direction = rng.standard_normal(x.dimension)
            direction *= delta / max(np.abs(direction).max(), 1e-300)
            worst = max(worst, abs(F(t, perturb(x, t, direction)) - base))
        moduli[float(delta)] = worst
    vals = [moduli[d] for d in sorted(moduli, reverse=True)]
    decreasing = all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))
    return {"moduli": moduli, "monotone_decreasing": decreasing}


def validate_derivatives(F, probe_set, h0=None):
    """Cross-check analytic derivatives against finite differences.

    Returns the max discrepancy seen for the gradient and (when declared
    C12 with an analytic Hessian) for the Hessian.
    """
    worst_g, worst_h = 0.0, 0.0
    for t, x in probe_set:
        if F.analytic_grad is not None:
            g_ana = np.asarray(F.analytic_grad(t, stop_at(x, t)), dtype=float)
            plain = FunctionalHandle(F.evaluator)
            g_num = gradient(plain, t, x, h0=h0).value
            worst_g = max(worst_g, float(np.abs(g_ana - g_num).max()))
        if F.analytic_hessian is not None:
            h_ana = np.asarray(F.analytic_hessian(t, stop_at(x, t)), dtype=float)
            plain = FunctionalHandle(F.evaluator)
            h_num = hessian(plain, t, x, h0=None).value
            worst_h = max(worst_h, float(np.abs(h_ana - h_num).max()))
    return {"grad": worst_g, "hessian": worst_h}


# -- generic (slow) kernel -------------------------------------------------------


def generic_kernel(F, fd_space=DEFAULT_SPACE_STEP, fd_time=DEFAULT_TIME_STEP):
    """Kernel fallback for functionals without a vectorized form.

    Builds each stopped variant as an actual path object, so a full engine
    pass costs O(K^2); meant for probes and small-grid tests.
    """

    def variant(state, k, w):
        path = state["path"]
        vals = path.values.copy()
        vals[k:] = w
        keep = path.jump_indices[path.jump_indices < k]
        if 1 <= k and np.any(vals[k] != vals[k - 1]):
            keep = np.append(keep, k)
        return CadlagPath(path.grid, vals, keep)

    def f(state, W, idx):
        t = state["t"]
        return np.array([F(t[k], variant(state, k, W[r])) for r, k in enumerate(idx)])

    def grad(state, W, idx):
        t = state["t"]
        d = W.shape[1]
        out = np.empty((len(idx), d))
        for r, k in enumerate(idx):
            for i in range(d):
                e = np.zeros(d)
                e[i] = fd_space
                up = F(t[k], variant(state, k, W[r] + e))
                dn = F(t[k], variant(state, k, W[r] - e))
                out[r, i] = (up - dn) / (2.0 * fd_space)
        return out

    def df_dt(state, W, idx):
        t = state["t"]
        T = t[-1]
        out = np.zeros(len(idx))
        for r, k in enumerate(idx):
            h = min(fd_time * max(1.0, T), T - t[k])
            if h <= 0.0:
                continue
            v = variant(state, k, W[r])
            out[r] = (F(t[k] + h, v) - F(t[k], v)) / h
        return out

    def hess(state, W, idx):
        d = W.shape[1]
        h = 1e-3
        out = np.empty((len(idx), d, d))
        t = state["t"]
        eye = np.eye(d)
        for r, k in enumerate(idx):
            v0 = F(t[k], variant(state, k, W[r]))
            for i in range(d):
                out[r, i, i] = (F(t[k], variant(state, k, W[r] + h * eye[i])) - 2 * v0
                                + F(t[k], variant(state, k, W[r] - h * eye[i]))) / h ** 2
                for j in range(i + 1, d):
                    val = (F(t[k], variant(state, k, W[r] + h * (eye[i] + eye[j])))
                           - F(t[k], variant(state, k, W[r] + h * (eye[i] - eye[j])))
                           - F(t[k], variant(state, k, W[r] + h * (eye[j] - eye[i])))
                           + F(t[k], variant(state, k, W[r] - h * (eye[i] + eye[j])))) / (4 * h ** 2)
                    out[r, i, j] = out[r, j, i] = val
        return out

    return TerminalKernel(None, f, grad=grad, df_dt=df_dt, hess=hess)


# -- pointwise function registry ---------------------------------------------------

# Entries: vectorized f(X), grad(X), hess(X) with X of shape (n, d); hess may
# be None for functions that are only C^1.

def _pf_square():
    def f(X):
        return X[:, 0] ** 2

    def g(X):
        out = np.zeros_like(X)
        out[:, 0] = 2.0 * X[:, 0]
        return out

    def h(X):
        n, d = X.shape
        out = np.zeros((n, d, d))
        out[:, 0, 0] = 2.0
        return out

    return f, g, h


def _pf_norm_sq():
    def f(X):
        return np.einsum("nd,nd->n", X, X)

    def g(X):
        return 2.0 * X

    def h(X):
        n, d = X.shape
        return np.broadcast_to(2.0 * np.eye(d), (n, d, d)).copy()

    return f, g, h


def _pf_sin():
    def f(X):
        return np.sin(X[:, 0])

    def g(X):
        out = np.zeros_like(X)
        out[:, 0] = np.cos(X[:, 0])
        return out

    def h(X):
        n, d = X.shape
        out = np.zeros((n, d, d))
        out[:, 0, 0] = -np.sin(X[:, 0])
        return out

    return f, g, h


def _pf_exp():
    def f(X):
        return np.exp(X[:, 0])

    def g(X):
        out = np.zeros_like(X)
        out[:, 0] = np.exp(X[:, 0])
        return out

    def h(X):
        n, d = X.shape
        out = np.zeros((n, d, d))
        out[:, 0, 0] = np.exp(X[:, 0])
        return out

    return f, g, h


def _pf_cube():
    def f(X):
        return X[:, 0] ** 3

    def g(X):
        out = np.zeros_like(X)
        out[:, 0] = 3.0 * X[:, 0] ** 2
        return out

    def h(X):
        n, d = X.shape
        out = np.zeros((n, d, d))
        out[:, 0, 0] = 6.0 * X[:, 0]
        return out

    return f, g, h


POINT_FUNCTIONS = {
    "square": _pf_square(),
    "norm_sq": _pf_norm_sq(),
    "sin": _pf_sin(),
    "exp": _pf_exp(),
    "cube": _pf_cube(),
}


def point_function(name):
    try:
        return POINT_FUNCTIONS[name]
    except KeyError:
        raise KeyError(f"unknown point function {name!r}; "
                       f"available: {sorted(POINT_FUNCTIONS)}") from None


# -- catalog -----------------------------------------------------------------------


def _rowvec(x):
    return np.atleast_1d(np.asarray(x, dtype=float))[None, :]


def terminal_functional(f_name="square", name=None):
    """F(t, x) = f(x(t)) for a registered pointwise f."""
    f, g, h = point_function(f_name)
    kern = TerminalKernel(
        None,
        lambda st, W, idx: f(W),
        grad=lambda st, W, idx: g(W),
        df_dt=lambda st, W, idx: np.zeros(len(idx)),
        hess=(lambda st, W, idx: h(W)) if h is not None else None,
    )
    return FunctionalHandle(
        lambda t, path: float(f(_rowvec(path.value_at(t)))[0]),
        name=name or f"terminal_{f_name}",
        analytic_DF=lambda t, path: 0.0,
        analytic_grad=lambda t, path: g(_rowvec(path.value_at(t)))[0],
        analytic_hessian=(lambda t, path: h(_rowvec(path.value_at(t)))[0]) if h else None,
        declared_class="C12" if h is not None else "C11",
        kernel=kern,
    )


def time_weighted_terminal(f_name="square", name=None):
    """F(t, x) = t * f(x(t)); its horizontal derivative is f(x(t))."""
    f, g, h = point_function(f_name)
    kern = TerminalKernel(
        None,
        lambda st, W, idx: st["t"][idx] * f(W),
        grad=lambda st, W, idx: st["t"][idx, None] * g(W),
        df_dt=lambda st, W, idx: f(W),
        hess=(lambda st, W, idx: st["t"][idx, None, None] * h(W)) if h else None,
    )
    return FunctionalHandle(
        lambda t, path: t * float(f(_rowvec(path.value_at(t)))[0]),
        name=name or f"time_weighted_{f_name}",
        analytic_DF=lambda t, path: float(f(_rowvec(path.value_at(t)))[0]),
        analytic_grad=lambda t, path: t * g(_rowvec(path.value_at(t)))[0],
        analytic_hessian=(lambda t, path: t * h(_rowvec(path.value_at(t)))[0]) if h else None,
        declared_class="C12" if h is not None else "C11",
        kernel=kern,
    )


def linear_functional(c, name="linear"):
    """F(t, x) = <c, x(t)>."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    d = c.size
    kern = TerminalKernel(
        None,
        lambda st, W, idx: W @ c,
        grad=lambda st, W, idx: np.broadcast_to(c, W.shape).copy(),
        df_dt=lambda st, W, idx: np.zeros(len(idx)),
        hess=lambda st, W, idx: np.zeros((len(idx), d, d)),
    )
    return FunctionalHandle(
        lambda t, path: float(c @ path.value_at(t)),
        name=name,
        analytic_DF=lambda t, path: 0.0,
        analytic_grad=lambda t, path: c,
        analytic_hessian=lambda t, path: np.zeros((d, d)),
        declared_class="C12",
        kernel=kern,
    )


def terminal_identity(coord=0):
    """F(t, x) = x^coord(t)."""

    def ev(t, path):
        return float(path.value_at(t)[coord])

    def grad(t, path):
        g = np.zeros(path.dimension)
        g[coord] = 1.0
        return g

    kern = TerminalKernel(
        None,
        lambda st, W, idx: W[:, coord],
        grad=lambda st, W, idx: np.eye(W.shape[1])[coord] * np.ones((len(idx), 1)),
        df_dt=lambda st, W, idx: np.zeros(len(idx)),
        hess=lambda st, W, idx: np.zeros((len(idx), W.shape[1], W.shape[1])),
    )
    return FunctionalHandle(ev, name="terminal_identity",
                            analytic_DF=lambda t, path: 0.0,
                            analytic_grad=grad,
                            analytic_hessian=lambda t, path: np.zeros((path.dimension,) * 2),
                            declared_class="C12", kernel=kern)


def quadratic_functional():
    """F(t, x) = |x(t)|^2 (squared Euclidean norm)."""
    return terminal_functional("norm_sq", name="quadratic")


def _history_integrals(path, coord):
    # I[k] = integral of x^coord over [0, t_k): terminal-independent.
    dt = np.diff(path.grid.knots)
    I = np.zeros(path.grid.knots.size)
    I[1:] = np.cumsum(path.values[:-1, coord] * dt)
    return I


def running_integral(coord=0, name=None):
    """F(t, x) = integral of x^coord over [0, t].

    A vertical bump at time t changes the path on a Lebesgue-null set of
    [0, t], so the space derivative vanishes; DF(t, x) = x^coord(t).
    """

    def ev(t, path):
        k = path.grid.index_at(t)
        dt = np.diff(path.grid.knots[:k + 1])
        head = float(np.dot(path.values[:k, coord], dt)) if k else 0.0
        return head + float(path.values[k, coord]) * (t - path.grid.knots[k])

    kern = TerminalKernel(
        lambda path: {"I": _history_integrals(path, coord)},
        lambda st, W, idx: st["I"][idx],
        grad=lambda st, W, idx: np.zeros_like(np.atleast_2d(W)),
        df_dt=lambda st, W, idx: W[:, coord],
        hess=lambda st, W, idx: np.zeros((len(idx), W.shape[1], W.shape[1])),
    )
    return FunctionalHandle(
        ev, name=name or "running_integral",
        analytic_DF=lambda t, path: float(path.value_at(t)[coord]),
        analytic_grad=lambda t, path: np.zeros(path.dimension),
        analytic_hessian=lambda t, path: np.zeros((path.dimension,) * 2),
        declared_class="C12", kernel=kern)


def running_integral_plus_linear(coord=0, c=(1.0,), name=None):
    """F(t, x) = integral_0^t x^coord(s) ds + <c, x(t)>."""
    base = running_integral(coord)
    c = np.atleast_1d(np.asarray(c, dtype=float))
    kern = TerminalKernel(
        lambda path: {"I": _history_integrals(path, coord)},
        lambda st, W, idx: st["I"][idx] + W @ c,
        grad=lambda st, W, idx: np.broadcast_to(c, W.shape).copy(),
        df_dt=lambda st, W, idx: W[:, coord],
        hess=lambda st, W, idx: np.zeros((len(idx), W.shape[1], W.shape[1])),
    )
    return FunctionalHandle(
        lambda t, path: base(t, path) + float(c @ path.value_at(t)),
        name=name or "running_integral_plus_linear",
        analytic_DF=lambda t, path: float(path.value_at(t)[coord]),
        analytic_grad=lambda t, path: c,
        analytic_hessian=lambda t, path: np.zeros((c.size, c.size)),
        declared_class="C12", kernel=kern)


def running_max(coord=0):
    """F(t, x) = max over [0, t] of x^coord; continuous, kinked at the max."""

    def ev(t, path):
        k = path.grid.index_at(t)
        return float(path.values[:k + 1, coord].max())

    def prep(path):
        v = path.values[:, coord]
        M = np.empty(v.size)
        M[0] = -np.inf  # empty strict history
        np.maximum.accumulate(v[:-1], out=M[1:])
        return {"M": M}

    kern = TerminalKernel(
        prep,
        lambda st, W, idx: np.maximum(st["M"][idx], W[:, coord]),
        df_dt=lambda st, W, idx: np.zeros(len(idx)),
    )
    return FunctionalHandle(ev, name="running_max", declared_class="C00",
                            analytic_DF=lambda t, path: 0.0, kernel=kern)


def anticipative_terminal(coord=0):
    """F(t, x) = x^coord(T): deliberately anticipative, for negative tests."""

    def ev(t, path):
        return float(path.values[-1, coord])

    kern = TerminalKernel(
        None,
        lambda st, W, idx: W[:, coord],  # on a stopped variant x(T) is the terminal
        grad=lambda st, W, idx: np.eye(W.shape[1])[coord] * np.ones((len(idx), 1)),
        df_dt=lambda st, W, idx: np.zeros(len(idx)),
    )
    return FunctionalHandle(ev, name="anticipative_terminal", declared_class="C00",
                            kernel=kern)


CATALOG_FACTORIES = {
    "terminal_identity": terminal_identity,
    "linear": linear_functional,
    "quadratic": quadratic_functional,
    "terminal": terminal_functional,
    "time_weighted_terminal": time_weighted_terminal,
    "running_integral": running_integral,
    "running_integral_plus_linear": running_integral_plus_linear,
    "running_max": running_max,
    "anticipative_terminal": anticipative_terminal,
}


def make_functional(name, **params):
    """Instantiate a catalog functional by name with keyword parameters."""
    try:
        factory = CATALOG_FACTORIES[name]
    except KeyError:
        raise KeyError(f"unknown functional {name!r}; "
                       f"available: {sorted(CATALOG_FACTORIES)}") from None
    return factory(**params)


def builtin_catalog():
    """Default-parameter instances of every catalog functional."""
    return {
        "terminal_identity": terminal_identity(),
        "linear": linear_functional((1.0,)),
        "quadratic": quadratic_functional(),
        "terminal": terminal_functional("square"),
        "time_weighted_terminal": time_weighted_terminal("square"),
        "running_integral": running_integral(),
        "running_integral_plus_linear": running_integral_plus_linear(0, (1.0,)),
        "running_max": running_max(),
        "anticipative_terminal": anticipative_terminal(),
    }
