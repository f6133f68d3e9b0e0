"""Integrals against the Brownian local-time measure.

The production representation is the forward-plus-time-reversed pair of Ito
sums.  On a grid, with g_k the integrand evaluated at knot k, the two sums
collapse to

    forward + backward = - sum_k (g_{k+1} - g_k) (B^j_{k+1} - B^j_k),

because the backward sum is the forward one read along the value-reversed
Brownian path with integrands at reversed-time left endpoints (= original
right endpoints).  The collapsed form is used for the reported value: for a
constant integrand every summand is exactly 0.0, so the telescoping identity
holds bitwise and not merely to rounding.

A Tanaka-formula surface estimator and the weak-derivative identity serve as
independent oracles, and the mixed L^2 / weighted-L^1 norm used to control
these integrals is computed as a diagnostic.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .mc import ensemble_mean, ensemble_mean_se
from .paths import CadlagPath, stop_at_left


class LocalTimeError(ValueError):
    pass


# -- integrands -----------------------------------------------------------------


class Integrand:
    """F(s, Y_{^s-}, x) with optional vectorized forms.

    ``fn(s, y_path, x)`` is the scalar form; ``y_path`` is the left-stopped Y
    (or None).  ``vec(t, yleft, X)`` evaluates all knots at once from the
    knot times, the matrix of Y left limits (or None) and the matrix of
    Brownian values.  ``dvec[j]`` is the same-signature x_j-derivative,
    needed by the weak-derivative identity oracle.
    """

    def __init__(self, fn=None, vec=None, dvec=None, name="integrand"):
        if fn is None and vec is None:
            raise LocalTimeError("need a scalar or vectorized form")
        self.fn = fn
        self.vec = vec
        self.dvec = dvec or {}
        self.name = name

    def values_at_knots(self, Y, B):
        t = B.grid.knots
        X = B.values
        if self.vec is not None:
            yleft = Y.pre_jump_values() if Y is not None else None
            return np.asarray(self.vec(t, yleft, X), dtype=float)
        out = np.empty(t.size)
        for k, s in enumerate(t):
            ypath = stop_at_left(Y, s) if Y is not None else None
            out[k] = self.fn(s, ypath, X[k])
        return out

    def derivative_at_knots(self, j, Y, B):
        if j not in self.dvec:
            raise LocalTimeError(f"integrand {self.name!r} has no d/dx_{j}")
        t = B.grid.knots
        yleft = Y.pre_jump_values() if Y is not None else None
        return np.asarray(self.dvec[j](t, yleft, B.values), dtype=float)


def space_integrand(g, dg=None, name="g(x)"):
    """Integrand depending on the Brownian point only: F(s, w, x) = g(x).

    g maps (n, m) arrays of points to (n,) values; dg, when given, is a
    mapping j -> same-shape derivative and feeds the identity oracle.
    """
    vec = lambda t, yleft, X: g(X)
    dvec = {j: (lambda t, yleft, X, _f=f: _f(X)) for j, f in (dg or {}).items()}

    def fn(s, ypath, x):
        return float(g(np.atleast_2d(x))[0])

    return Integrand(fn=fn, vec=vec, dvec=dvec, name=name)


CONSTANT_ONE = space_integrand(lambda X: np.ones(X.shape[0]), name="1")


def coordinate_integrand(j=0):
    return space_integrand(lambda X: X[:, j],
                           dg={j: lambda X: np.ones(X.shape[0])},
                           name=f"x_{j}")


@dataclass
class LocalTimeIntegralEstimate:
    """Value and Monte Carlo error of the local-time integral."""

    value: float
    std_error: float
    method: str  # forward_backward | simple_formula | derivative_identity
    n_steps: int
    n_paths: int
    coordinate: int = 0
    t: float = None
    hypothesis_violating: bool = False
    forward_mean: float = None
    backward_mean: float = None
    per_path: np.ndarray = field(default=None, repr=False)


# -- forward/backward representation ------------------------------------------------


def _eval_index(grid, t):
    if t is None:
        return grid.n_steps
    return grid.index_at(t)


def fb_combined(g, Bj, k_t):
    """-sum_{k<k_t} (g_{k+1}-g_k)(B_{k+1}-B_k); exact 0 for constant g."""
    dg = g[1:k_t + 1] - g[:k_t]
    dB = Bj[1:k_t + 1] - Bj[:k_t]
    return -float(np.dot(dg, dB))


def fb_split(g, Bj, k_t):
    """The forward and backward Ito sums separately (diagnostics)."""
    dB = Bj[1:k_t + 1] - Bj[:k_t]
    fwd = float(np.dot(g[:k_t], dB))
    bwd = -float(np.dot(g[1:k_t + 1], dB))
    return fwd, bwd


def _as_pairs(Y, B):
    if isinstance(B, CadlagPath):
        return [(Y, B)]
    if Y is None:
        return [(None, b) for b in B]
    return list(zip(Y, B))


def forward_backward_integral(F, Y, B, j=0, t=None, y_independent=True):
    """Local-time integral of F dL^x(B^j) over [0, t] via the two Ito sums.

    Y and B may be single paths or matched sequences (an ensemble).  The
    representation requires Y independent of B; callers feeding a Y built
    from B itself must say so via y_independent=False, which labels the
    estimate instead of silently producing a number the representation does
    not back.
    """
    pairs = _as_pairs(Y, B)
    vals, fwds, bwds = [], [], []
    for y, b in pairs:
        if not 0 <= j < b.dimension:
            raise LocalTimeError(f"coordinate {j} out of range")
        k_t = _eval_index(b.grid, t)
        g = F.values_at_knots(y, b)
        vals.append(fb_combined(g, b.values[:, j], k_t))
        fw, bw = fb_split(g, b.values[:, j], k_t)
        fwds.append(fw)
        bwds.append(bw)
    mean, se = ensemble_mean_se(vals)
    b0 = pairs[0][1]
    return LocalTimeIntegralEstimate(
        mean, se, "forward_backward", b0.grid.n_steps, len(pairs), j,
        t=b0.grid.knots[_eval_index(b0.grid, t)],
        hypothesis_violating=not y_independent,
        forward_mean=float(ensemble_mean(fwds)),
        backward_mean=float(ensemble_mean(bwds)),
        per_path=np.asarray(vals))


def displaced_integral(F, Z, N, B, s, t, j=0):
    """Two-sided representation for the displaced Brownian motion B(.) - B(s).

    F has signature (s, Z_{^s}, N(r-), x); the jump part enters through its
    left limits in both sums (the countable jump set carries no dL mass, and
    predictable integrands keep the discrete sums telescoping-exact).
    """
    if s > t:
        raise LocalTimeError("need s <= t")
    pairs = _as_pairs(Z, B)
    if N is None or isinstance(N, CadlagPath):
        n_paths = [N] * len(pairs)
    else:
        n_paths = list(N)
    vals = []
    for (z, b), n in zip(pairs, n_paths):
        grid = b.grid
        ks, kt = grid.index_at(s), _eval_index(grid, t)
        zs = stop_at_left(z, grid.knots[ks]) if z is not None else None
        nleft = n.pre_jump_values() if n is not None else None
        xs = b.values - b.values[ks]
        g = np.empty(kt + 1 - ks)
        for r, k in enumerate(range(ks, kt + 1)):
            nval = nleft[k] if nleft is not None else None
            g[r] = F(grid.knots[ks], zs, nval, xs[k])
        vals.append(fb_combined(g, b.values[ks:kt + 1, j], kt - ks))
    mean, se = ensemble_mean_se(vals)
    b0 = pairs[0][1]
    return LocalTimeIntegralEstimate(mean, se, "forward_backward",
                                     b0.grid.n_steps, len(pairs), j,
                                     t=t, per_path=np.asarray(vals))


def derivative_identity_integral(F, Y, B, j=0, t=None):
    """Oracle: integral against dL equals -int_0^t d_j F(s, Y_{^s-}, B(s)) ds."""
    pairs = _as_pairs(Y, B)
    vals = []
    for y, b in pairs:
        k_t = _eval_index(b.grid, t)
        df = F.derivative_at_knots(j, y, b)
        dt = np.diff(b.grid.knots)[:k_t]
        vals.append(-float(np.dot(df[:k_t], dt)))
    mean, se = ensemble_mean_se(vals)
    b0 = pairs[0][1]
    return LocalTimeIntegralEstimate(mean, se, "derivative_identity",
                                     b0.grid.n_steps, len(pairs), j,
                                     t=b0.grid.knots[_eval_index(b0.grid, t)],
                                     per_path=np.asarray(vals))


# -- local-time surface ---------------------------------------------------------------


@dataclass
class LocalTimeSurface:
    """L^x_t of one scalar Brownian coordinate on a space-time grid."""

    x_grid: np.ndarray   # (G,)
    times: np.ndarray    # (K+1,)
    L: np.ndarray        # (G, K+1)
    method: str
    bandwidth: float = None

    def at(self, x, t):
        gi = int(np.searchsorted(self.x_grid, x))
        if gi >= self.x_grid.size or abs(self.x_grid[gi] - x) > 1e-12:
            if gi and abs(self.x_grid[gi - 1] - x) <= 1e-12:
                gi -= 1
            else:
                raise LocalTimeError(f"level {x} not on the surface grid")
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.L[gi, max(k, 0)])

    def occupation_mass(self):
        """Trapezoid of L^x_T over the space grid; approximates the horizon."""
        return float(np.trapezoid(self.L[:, -1], self.x_grid))


def surface_to_csv(surface, fileobj=None):
    """Export a surface as CSV rows (x, t, L); floats via repr."""
    import csv
    import io
    own = fileobj is None
    if own:
        fileobj = io.StringIO()
    w = csv.writer(fileobj, lineterminator="\n")
    w.writerow(["x", "t", "L"])
    for gi, x in enumerate(surface.x_grid):
        for k, t in enumerate(surface.times):
            w.writerow([repr(float(x)), repr(float(t)), repr(float(surface.L[gi, k]))])
    return fileobj.getvalue() if own else None


def local_time_surface(B, x_grid, eps=None, method="tanaka"):
    """Estimate L^x_t for a scalar Brownian path.

    tanaka:     |B_t - x| - |B_0 - x| - sum sgn(B_s - x) dB_s; each discrete
                increment is 0 away from crossings and nonnegative at them,
                so the estimator is pathwise nondecreasing in t.
    occupation: (2 eps)^{-1} Lebesgue{s <= t : |B_s - x| < eps}, the classic
                kernel cross-check; eps defaults to sqrt(T/K).
    """
    x_grid = np.asarray(x_grid, dtype=float)
    b = B.values[:, 0] if B.values.ndim == 2 else np.asarray(B.values)
    t = B.grid.knots
    if method == "tanaka":
        db = np.diff(b)
        sgn = np.sign(b[None, :-1] - x_grid[:, None])  # (G, K)
        mart = np.concatenate([np.zeros((x_grid.size, 1)),
                               np.cumsum(sgn * db[None, :], axis=1)], axis=1)
        L = np.abs(b[None, :] - x_grid[:, None]) - np.abs(b[0] - x_grid)[:, None] - mart
        return LocalTimeSurface(x_grid, t, L, "tanaka")
    if method == "occupation":
        if eps is None:
            eps = np.sqrt(t[-1] / B.grid.n_steps)
        if eps <= 0:
            raise LocalTimeError("bandwidth must be positive")
        dt = np.diff(t)
        inside = (np.abs(b[None, :-1] - x_grid[:, None]) < eps) * dt[None, :]
        L = np.concatenate([np.zeros((x_grid.size, 1)),
                            np.cumsum(inside, axis=1)], axis=1) / (2.0 * eps)
        return LocalTimeSurface(x_grid, t, L, "occupation", bandwidth=float(eps))
    raise LocalTimeError(f"unknown method {method!r}")


def simple_oracle_estimate(F, B, j=0, t=None, n_levels=256, pad=0.75):
    """Third oracle: a fine piecewise-constant approximation of a space-only
    integrand, integrated exactly against each path's Tanaka surface.

    Only meaningful for scalar Brownian paths and integrands F(s, w, x) that
    depend on x alone; the midpoint sampling of the cells contributes an
    O(level-spacing) bias that a fine grid keeps below Monte Carlo noise.
    """
    paths = B if not isinstance(B, CadlagPath) else [B]
    vals = []
    for b in paths:
        if b.dimension != 1:
            raise LocalTimeError("the surface oracle needs scalar Brownian paths")
        bval = b.values[:, 0]
        lo, hi = float(bval.min()) - pad, float(bval.max()) + pad
        levels = np.linspace(lo, hi, n_levels + 1)
        mids = 0.5 * (levels[:-1] + levels[1:])
        gmid = np.asarray(F.vec(np.zeros(mids.size), None, mids[:, None]), dtype=float)
        surf = local_time_surface(b, levels, method="tanaka")
        horizon = b.grid.horizon
        t_hi = horizon if t is None else t
        vals.append(simple_integral(gmid[None, :], np.array([0.0, horizon]),
                                    levels, surf, t_hi))
    mean, se = ensemble_mean_se(vals)
    b0 = paths[0]
    return LocalTimeIntegralEstimate(mean, se, "simple_formula", b0.grid.n_steps,
                                     len(paths), j, t=t or b0.grid.horizon,
                                     per_path=np.asarray(vals))


def simple_integral(coeffs, s_times, x_levels, surface, t):
    """Exact rectangular-increment sum of a simple functional against dL.

    coeffs[i, j] weights the cell (s_i, s_{i+1}] x (x_j, x_{j+1}]; times must
    be knots of the surface and levels must be surface grid points.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    s_times = np.asarray(s_times, dtype=float)
    x_levels = np.asarray(x_levels, dtype=float)
    if coeffs.shape != (s_times.size - 1, x_levels.size - 1):
        raise LocalTimeError("coeffs must be (len(s)-1, len(x)-1)")
    total = 0.0
    for i in range(coeffs.shape[0]):
        s_lo, s_hi = min(s_times[i], t), min(s_times[i + 1], t)
        for jx in range(coeffs.shape[1]):
            if coeffs[i, jx] == 0.0:
                continue
            inc = (surface.at(x_levels[jx + 1], s_hi) - surface.at(x_levels[jx + 1], s_lo)
                   - surface.at(x_levels[jx], s_hi) + surface.at(x_levels[jx], s_lo))
            total += coeffs[i, jx] * inc
    return float(total)


# -- the local-time norm ----------------------------------------------------------------


def _folded_abs_mean(mu, sd):
    """E|Z| for Z ~ N(mu, sd^2), vectorized."""
    sd = np.maximum(sd, 1e-300)
    return sd * np.sqrt(2.0 / np.pi) * np.exp(-0.5 * (mu / sd) ** 2) \
        + mu * erf(mu / (sd * np.sqrt(2.0)))


def local_time_norm(F, Y, B, n_first_cell=64):
    """Monte Carlo value of 2 (E int F^2 dt)^{1/2} + E int |F| |B(t)|_1 / t dt.

    The 1/t singularity lives on the first grid cell, where the path holds no
    information between 0 and t_1; substituting t = u^2 and using the
    Brownian-bridge conditional mean of |B(t)|_1 given B(t_1) makes the
    integrand bounded and the first-cell contribution unbiased.
    """
    pairs = _as_pairs(Y, B)
    if len(pairs) < 2:
        raise LocalTimeError("the norm estimate needs at least 2 paths")
    gx, gw = np.polynomial.legendre.leggauss(n_first_cell)
    sq, l1 = [], []
    for y, b in pairs:
        t = b.grid.knots
        dt = np.diff(t)
        yv = y.values if y is not None else None
        fv = np.asarray(F.vec(t, yv, b.values), dtype=float) if F.vec is not None \
            else F.values_at_knots(y, b)
        sq.append(float(np.dot(fv[:-1] ** 2, dt)))
        tail = float(np.dot(np.abs(fv[1:-1]) * np.abs(b.values[1:-1]).sum(axis=1) / t[1:-1],
                            dt[1:]))
        t1 = t[1]
        u = np.sqrt(t1) * (gx + 1.0) / 2.0
        wu = gw * np.sqrt(t1) / 2.0
        ts = u ** 2
        b1 = b.values[1]
        mu_bridge = np.outer(ts / t1, b1)
        sd_bridge = np.sqrt(ts * (t1 - ts) / t1)
        e_l1 = _folded_abs_mean(mu_bridge, sd_bridge[:, None]).sum(axis=1)
        if F.vec is not None:
            f_first = np.abs(np.asarray(F.vec(ts, np.tile(yv[0], (ts.size, 1)) if yv is not None else None,
                                              mu_bridge), dtype=float))
        else:
            f_first = np.abs(np.array([F.fn(s, stop_at_left(y, 0.0) if y is not None else None, mb)
                                       for s, mb in zip(ts, mu_bridge)]))
        head = float(np.dot(wu, 2.0 * f_first * e_l1 / u))
        l1.append(tail + head)
    return 2.0 * float(np.sqrt(ensemble_mean(sq))) + float(ensemble_mean(l1))
