"""Coordinate antiderivative and jump-smoothing operators.

Given the spectral data of a covariance matrix, functions here act on maps
defined on R^m (the coordinates of the driving Brownian motion).  Jumps
y in R^d enter through R y in R^m, where R is the left-inverse of
sigma^{1/2}; sigma^{1/2} R equals the projection Q onto range(sigma^{1/2}),
so perturbing a path terminal by u * Q y is the path-space image of the
operator's x + u R y shift.

The composite ``op_AI`` needs only first derivatives of its argument, which
is the whole point: it is the production form used inside the optimal-formula
verifier, while op_A(op_I(.)) exists as a cross-check.
"""

from dataclasses import dataclass

import numpy as np

from .paths import perturb, stop_at_left
from .levy import spectral


class OperatorError(ValueError):
    pass


class OperatorTrace:
    """Debug recorder for operator evaluations; dumps (x, value, method) CSV."""

    def __init__(self):
        self.rows = []

    def record(self, method, x, value):
        self.rows.append((method, np.atleast_1d(np.asarray(x, dtype=float)).copy(),
                          float(value)))

    def to_csv(self, fileobj=None):
        import csv
        import io
        own = fileobj is None
        if own:
            fileobj = io.StringIO()
        w = csv.writer(fileobj, lineterminator="\n")
        w.writerow(["method", "x", "value"])
        for method, x, value in self.rows:
            w.writerow([method, " ".join(repr(float(v)) for v in x), repr(value)])
        return fileobj.getvalue() if own else None


@dataclass(frozen=True)
class OperatorContext:
    """Quadratures shared by every nu-integral of a verification run."""

    decomp: object
    nu_nodes: np.ndarray    # (Qn, d), all inside |y|_2 < 1
    nu_weights: np.ndarray  # (Qn,), nu-measure weights (rate * law weight)
    u_nodes: np.ndarray     # Gauss-Legendre on [0, 1]
    u_weights: np.ndarray

    def __post_init__(self):
        if self.nu_nodes.size and np.any(np.linalg.norm(self.nu_nodes, axis=1) >= 1.0):
            raise OperatorError("nu quadrature nodes must lie in the unit ball")
        if np.any(self.nu_weights < 0) or np.any(self.u_weights < 0):
            raise OperatorError("quadrature weights must be nonnegative")

    @classmethod
    def from_model(cls, model, decomp=None, n_u=16):
        if decomp is None:
            decomp = spectral(model.sigma)
        nodes, weights = model.nu.small_nodes()
        if not nodes.size:
            nodes = np.zeros((0, model.dimension))
        gx, gw = np.polynomial.legendre.leggauss(n_u)
        return cls(decomp, nodes, weights, (gx + 1.0) / 2.0, gw / 2.0)

    @property
    def rank(self):
        return self.decomp.rank

    def mapped_jumps(self):
        """(R y_q, Q y_q) for all small-jump nodes."""
        Ry = self.nu_nodes @ self.decomp.R.T if self.rank else np.zeros((self.nu_nodes.shape[0], 0))
        Qy = self.nu_nodes @ self.decomp.Q.T
        return Ry, Qy


# -- finite-difference helpers ---------------------------------------------------


def _fd_grad_i(f, i, x, h):
    e = np.zeros(x.size)
    e[i] = h
    return (f(x + e) - f(x - e)) / (2.0 * h)


def _fd_second_i(f, i, x, h):
    # Richardson over h, h/2 kills the h^2 term; needed to keep the
    # composition check op_A(op_I f) == op_AI inside 1e-8 when op_I is
    # itself a quadrature.
    e = np.zeros(x.size)
    e[i] = 1.0

    def d2(step):
        return (f(x + step * e) - 2.0 * f(x) + f(x - step * e)) / step ** 2

    h2 = h / 2.0
    return (4.0 * d2(h2) - d2(h)) / 3.0


# -- the operators ------------------------------------------------------------------


def op_I(f, i, x, tol=1e-13, order=32, max_depth=14, trace=None):
    """Signed integral of f along coordinate i from 0 to x[i].

    Adaptive Gauss-Legendre: a panel is accepted when splitting it changes
    the value by less than tol (scaled); f must be finite on the segment.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not 0 <= i < x.size:
        raise OperatorError(f"coordinate {i} out of range")
    xi = float(x[i])
    if xi == 0.0:
        if trace is not None:
            trace.record("op_I", x, 0.0)
        return 0.0
    gx, gw = np.polynomial.legendre.leggauss(order)

    def seg(y):
        z = x.copy()
        z[i] = y
        val = f(z)
        if not np.isfinite(val):
            raise OperatorError(f"integrand not finite at {z}")
        return float(val)

    def panel(a, b):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        return half * sum(w * seg(mid + half * g) for g, w in zip(gx, gw))

    def adapt(a, b, whole, depth):
        mid = 0.5 * (a + b)
        left, right = panel(a, mid), panel(mid, b)
        if depth >= max_depth or abs(left + right - whole) <= tol * max(1.0, abs(whole)):
            return left + right
        return adapt(a, mid, left, depth + 1) + adapt(mid, b, right, depth + 1)

    a, b = (0.0, xi) if xi > 0 else (xi, 0.0)
    value = adapt(a, b, panel(a, b), 0)
    value = value if xi > 0 else -value
    if trace is not None:
        trace.record("op_I", x, value)
    return value


def op_A(f, i, x, ctx, df=None, d2f=None, fd_step=1e-5, fd2_step=2e-2, trace=None):
    """Half second derivative plus the smoothed-jump difference integral.

    df/d2f return the gradient component and second derivative along
    coordinate i at a point of R^m; central finite differences (with a
    Richardson-extrapolated second difference) fill in when absent.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    scale = max(1.0, float(np.abs(x).max()))
    if d2f is not None:
        second = float(d2f(x))
    else:
        second = _fd_second_i(f, i, x, fd2_step * scale)
    value = 0.5 * second

    if ctx.nu_nodes.size:
        dfi = (lambda z: float(df(z))) if df is not None else \
            (lambda z: _fd_grad_i(f, i, z, fd_step * scale))
        Ry, _ = ctx.mapped_jumps()
        base = dfi(x)
        for q, wq in enumerate(ctx.nu_weights):
            ry = Ry[q]
            inner = sum(wu * (dfi(x + u * ry) - base) for u, wu in zip(ctx.u_nodes, ctx.u_weights))
            value += wq * inner * ry[i]
    if trace is not None:
        trace.record("op_A", x, value)
    return float(value)


def op_AI(f, i, x, ctx, df=None, fd_step=1e-5, trace=None):
    """Composite A_i I_i in its reduced form: only f and df_i are needed.

    Equals op_A(op_I(f, i, .), i, x, ctx) for C^2 data, since the i-th
    derivative of the coordinate antiderivative is f itself.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    scale = max(1.0, float(np.abs(x).max()))
    if df is not None:
        first = float(df(x))
    else:
        first = _fd_grad_i(f, i, x, fd_step * scale)
    value = 0.5 * first
    if ctx.nu_nodes.size:
        Ry, _ = ctx.mapped_jumps()
        f0 = float(f(x))
        for q, wq in enumerate(ctx.nu_weights):
            ry = Ry[q]
            inner = sum(wu * (float(f(x + u * ry)) - f0)
                        for u, wu in zip(ctx.u_nodes, ctx.u_weights))
            value += wq * inner * ry[i]
    if trace is not None:
        trace.record("op_AI", x, value)
    return float(value)


def op_AI_functional(F, j, s, X, x, ctx, pre_jump=None, fd_step=1e-6, trace=None):
    """op_AI applied to the frozen-path slice of a path functional.

    The slice is G(z) = F(s, P(z)) for z in R^m, where P(z) keeps X's history
    before s and holds the terminal value X(s-) + sigma^{1/2} (z - x) from s
    on.  At z = x the path is exactly the left-stopped X, so the anchoring is
    relative to the path state rather than to absolute coordinates (the
    drift-plus-jump content of X(s-) rides along).  Then

        op_AI G(x) = 1/2 <sigma^{1/2} e_j, grad F(s, P(x))>
                     + sum_nu int_0^1 (F(s, P(x + u R y)) - F(s, P(x))) (R y)^j du,

    and the perturbation inside F is by u Q y because sigma^{1/2} R = Q.

    pre_jump overrides X(s-) when the caller has the exact pre-jump value
    (a path's own jump record carries storage increments, which lag the
    diffusion over the last cell).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    decomp = ctx.decomp
    m = decomp.rank
    if not 0 <= j < m:
        raise OperatorError(f"coordinate {j} out of range for rank {m}")
    if pre_jump is None:
        base = stop_at_left(X, s)
    else:
        k = X.grid.index_at(s)
        base = perturb(X, s, np.asarray(pre_jump, dtype=float) - X.values[k])

    sh_j = decomp.sigma_half[:, j]
    if F.analytic_grad is not None:
        grad = np.asarray(F.analytic_grad(s, base), dtype=float)
        first = float(sh_j @ grad)
    else:
        h = fd_step * max(1.0, float(np.abs(base.value_at(s)).max()))

        def along(step):
            return F(s, perturb(base, s, step * sh_j))

        first = (along(h) - along(-h)) / (2.0 * h)

    value = 0.5 * first
    if ctx.nu_nodes.size:
        Ry, Qy = ctx.mapped_jumps()
        f0 = F(s, base)
        for q, wq in enumerate(ctx.nu_weights):
            inner = sum(wu * (F(s, perturb(base, s, u * Qy[q])) - f0)
                        for u, wu in zip(ctx.u_nodes, ctx.u_weights))
            value += wq * inner * Ry[q, j]
    if trace is not None:
        trace.record("op_AI_functional", x, value)
    return float(value)
