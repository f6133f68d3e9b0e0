"""Levy triplets, spectral data for singular covariance, and path simulation.

Simulation follows the Levy-Ito decomposition X(t) = mu*t + S*B(t) + N(t)
with S = sigma^{1/2} of rank m, B an m-dimensional Brownian motion and N the
compound-Poisson part compensated on the ball |y| < 1.  Jump times are
inserted into the time grid exactly, so pre-jump values X(t-) = X(t) - y are
exact at jump knots rather than lagged to the previous grid point.

Only finite-activity jump measures are supported; an infinite-activity
measure has to be truncated by the caller before it gets here.
"""

from dataclasses import dataclass, field

import numpy as np

from .paths import CadlagPath, TimeGrid

#: radius separating compensated small jumps from uncompensated large ones.
#: Fixed (not configurable) so the drift convention cannot silently change.
SMALL_JUMP_RADIUS = 1.0


class ModelError(ValueError):
    """Invalid Levy model data (asymmetric/indefinite sigma, bad rates...)."""


# -- jump measure --------------------------------------------------------------


@dataclass(frozen=True)
class JumpComponent:
    """One finite-activity component: rate * (normalized jump law).

    ``sampler(rng, n)`` draws n jumps; ``nodes``/``weights`` are a quadrature
    of the *normalized* law (weights sum to 1), reused verbatim by every
    nu-integral so compensators and correction terms share one discrete
    measure.
    """

    rate: float
    sampler: object
    nodes: np.ndarray    # (Q, d)
    weights: np.ndarray  # (Q,)
    label: str = "component"

    def __post_init__(self):
        if self.rate <= 0:
            raise ModelError("jump rate must be positive")
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        weights = np.asarray(self.weights, dtype=float)
        if np.any(weights < 0):
            raise ModelError("quadrature weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ModelError("quadrature weights must sum to 1 per component")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)


def atom(rate, point, label=None):
    """Deterministic jump size: a point mass (quadrature is exact)."""
    point = np.atleast_1d(np.asarray(point, dtype=float))

    def sampler(rng, n):
        return np.tile(point, (n, 1))

    return JumpComponent(rate, sampler, point[None, :], np.array([1.0]),
                         label=label or f"atom@{point.tolist()}")


def uniform_ball(rate, center, radius, label=None):
    """Uniform law on a ball (interval for d=1, disk for d=2)."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    d = center.size
    if radius <= 0:
        raise ModelError("radius must be positive")
    if d == 1:
        gx, gw = np.polynomial.legendre.leggauss(64)
        nodes = (center[0] + radius * gx)[:, None]
        weights = gw / 2.0

        def sampler(rng, n):
            return center[0] + radius * rng.uniform(-1.0, 1.0, size=(n, 1))
    elif d == 2:
        gr, wr = np.polynomial.legendre.leggauss(8)
        r = radius * (gr + 1.0) / 2.0
        wr = wr * r / 2.0  # weight 2r/R^2 dr, normalized below
        th = 2.0 * np.pi * (np.arange(8) + 0.5) / 8.0
        nodes = np.array([center + ri * np.array([np.cos(t), np.sin(t)])
                          for ri in r for t in th])
        weights = np.repeat(wr, 8)
        weights = weights / weights.sum()

        def sampler(rng, n):
            rr = radius * np.sqrt(rng.uniform(size=n))
            tt = rng.uniform(0.0, 2.0 * np.pi, size=n)
            return center + np.column_stack([rr * np.cos(tt), rr * np.sin(tt)])
    else:
        raise NotImplementedError("uniform_ball quadrature implemented for d <= 2")
    return JumpComponent(rate, sampler, nodes, weights, label=label or "uniform_ball")


def gaussian_truncated(rate, mean, sigma, bound, label=None):
    """Isotropic normal N(mean, sigma^2 I) conditioned on |y|_2 <= bound."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    d = mean.size
    if sigma <= 0 or bound <= 0:
        raise ModelError("sigma and bound must be positive")
    if d == 1:
        gx, gw = np.polynomial.legendre.leggauss(64)
        nodes = (bound * gx)[:, None]
        pdf = np.exp(-0.5 * ((nodes[:, 0] - mean[0]) / sigma) ** 2)
        weights = gw * pdf
    elif d == 2:
        gx, gw = np.polynomial.legendre.leggauss(8)
        xs = bound * gx
        nodes = np.array([[a, b] for a in xs for b in xs])
        w2 = np.array([wa * wb for wa in gw for wb in gw])
        inside = np.linalg.norm(nodes, axis=1) <= bound
        dev = nodes - mean
        pdf = np.exp(-0.5 * np.einsum("nd,nd->n", dev, dev) / sigma ** 2)
        weights = w2 * pdf * inside
    else:
        raise NotImplementedError("gaussian_truncated quadrature implemented for d <= 2")
    total = weights.sum()
    if total <= 0:
        raise ModelError("truncation removed all mass")
    weights = weights / total

    def sampler(rng, n):
        out = np.empty((n, d))
        got = 0
        while got < n:  # rejection; acceptance bounded away from 0
            cand = mean + sigma * rng.standard_normal(size=(2 * (n - got) + 8, d))
            keep = cand[np.linalg.norm(cand, axis=1) <= bound]
            take = min(n - got, keep.shape[0])
            out[got:got + take] = keep[:take]
            got += take
        return out

    return JumpComponent(rate, sampler, nodes, weights, label=label or "gaussian_truncated")


@dataclass(frozen=True)
class JumpSpec:
    """Finite-activity jump measure as a sum of rate-weighted components."""

    components: tuple = ()
    small_jump_cut: float = SMALL_JUMP_RADIUS

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.small_jump_cut != SMALL_JUMP_RADIUS:
            raise ModelError("the small/large jump radius is fixed at 1")

    @property
    def total_rate(self):
        return float(sum(c.rate for c in self.components))

    @property
    def is_empty(self):
        return not self.components

    def measure_nodes(self):
        """All quadrature nodes with nu-measure weights (rate * law weight)."""
        if self.is_empty:
            return np.zeros((0, 1)), np.zeros(0)
        nodes = np.concatenate([c.nodes for c in self.components], axis=0)
        weights = np.concatenate([c.rate * c.weights for c in self.components])
        return nodes, weights

    def small_nodes(self):
        """Quadrature of nu restricted to |y|_2 < 1."""
        nodes, weights = self.measure_nodes()
        mask = np.linalg.norm(nodes, axis=1) < self.small_jump_cut
        return nodes[mask], weights[mask]

    def small_compensator(self, d):
        """integral of y over |y|_2 < 1 against nu, by the stored quadrature."""
        nodes, weights = self.small_nodes()
        if not nodes.size:
            return np.zeros(d)
        return weights @ nodes

    def mean_large_norm(self):
        """integral of |y| over |y|_2 >= 1 (mean diagnostic; finite by quadrature)."""
        nodes, weights = self.measure_nodes()
        if not nodes.size:
            return 0.0
        norms = np.linalg.norm(nodes, axis=1)
        return float(weights[norms >= self.small_jump_cut]
                     @ norms[norms >= self.small_jump_cut])


# -- model and spectral data ----------------------------------------------------


@dataclass(frozen=True)
class LevyModel:
    """Characteristic triplet (mu, sigma, nu)."""

    mu: np.ndarray
    sigma: np.ndarray
    nu: JumpSpec = field(default_factory=JumpSpec)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        d = mu.size
        if sigma.shape != (d, d):
            raise ModelError(f"sigma must be {d}x{d}")
        if np.abs(sigma - sigma.T).max() > 1e-12:
            raise ModelError("sigma must be symmetric within 1e-12")
        w = np.linalg.eigvalsh(sigma)
        if w.min() < -1e-10:
            raise ModelError(f"sigma indefinite: min eigenvalue {w.min():.3e}")
        for comp in self.nu.components:
            if comp.nodes.shape[1] != d:
                raise ModelError("jump component dimension mismatch")

    @property
    def dimension(self):
        return self.mu.size


@dataclass(frozen=True)
class SpectralDecomp:
    """sigma^{1/2} (d x m), projection Q onto its range, left-inverse R."""

    sigma_half: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    rank: int
    eigenvalues: np.ndarray

    @property
    def full_rank(self):
        return self.rank == self.Q.shape[0]


def spectral(sigma, tol_rank=1e-10):
    """Eigendecomposition with relative rank cutoff tol_rank * max eigenvalue.

    Negative eigenvalues beyond -1e-10 raise; tiny negatives are clamped to
    zero.  When sigma has full rank, Q is the identity exactly, which makes
    the (I - Q) correction terms vanish bitwise.
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    d = sigma.shape[0]
    if sigma.shape != (d, d) or np.abs(sigma - sigma.T).max() > 1e-12:
        raise ModelError("sigma must be square symmetric")
    w, V = np.linalg.eigh(sigma)
    if w.min() < -1e-10:
        raise ModelError(f"sigma indefinite: min eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    cutoff = tol_rank * (w.max() if w.size else 0.0)
    keep = w > cutoff
    m = int(keep.sum())
    order = np.argsort(w[keep])[::-1]
    vals = w[keep][order]
    vecs = V[:, keep][:, order]
    sigma_half = vecs * np.sqrt(vals)
    if m == d:
        Q = np.eye(d)
    elif m == 0:
        Q = np.zeros((d, d))
    else:
        Q = vecs @ vecs.T
    R = (vecs / np.sqrt(vals)).T if m else np.zeros((0, d))
    return SpectralDecomp(sigma_half, Q, R, m, vals)


@dataclass(frozen=True)
class DriftCondition:
    finite: bool
    value: float


def check_drift_condition(model, decomp):
    """Quadrature of |(I - Q) y|_2 over the small-jump part of nu.

    Always finite for finite-activity measures; the value itself is the
    interesting output (0 exactly when sigma has full rank).
    """
    nodes, weights = model.nu.small_nodes()
    if not nodes.size:
        return DriftCondition(True, 0.0)
    resid = nodes - nodes @ decomp.Q.T
    return DriftCondition(True, float(weights @ np.linalg.norm(resid, axis=1)))


# -- simulation ------------------------------------------------------------------


@dataclass(frozen=True)
class SimulatedLevyPath:
    """One simulated path with its driving Brownian motion and exact jumps."""

    X: CadlagPath
    B: object  # CadlagPath of dimension m, or None when rank m = 0
    N_values: np.ndarray      # pure-jump part at knots (compensated)
    jump_indices: np.ndarray  # knot indices of the jumps
    jump_sizes: np.ndarray    # exact jump vectors y
    jump_small: np.ndarray    # |y|_2 < 1 mask
    seed: int
    model: LevyModel
    decomp: SpectralDecomp

    @property
    def grid(self):
        return self.X.grid

    def jump_times(self):
        return self.X.grid.knots[self.jump_indices]

    def n_path(self):
        """The pure-jump Levy part (0, 0, nu) as a path of its own."""
        return CadlagPath(self.X.grid, self.N_values, self.jump_indices)

    def drift_jump_left(self):
        """a_k = mu * t_k + N(t_k-): the part of X(t-) not driven by B.

        N(t-) is exact because jump times are knots: subtract y at jump rows.
        """
        a = self.model.mu * self.grid.knots[:, None] + self.N_values
        if self.jump_indices.size:
            a = a.copy()
            a[self.jump_indices] -= self.jump_sizes
        return a

    def pre_jump_X(self):
        """X(t_k-) exactly: X minus the jump at jump knots, X elsewhere."""
        out = self.X.values.copy()
        if self.jump_indices.size:
            out[self.jump_indices] -= self.jump_sizes
        return out


def simulate(model, n_steps, seed, horizon=1.0, decomp=None):
    """Simulate one path on a uniform K-step grid refined by exact jump times.

    Deterministic given (model, n_steps, seed, horizon): draws happen in a
    fixed order (per component: count, times, sizes; then the Brownian
    increments on the refined grid).
    """
    if n_steps < 1:
        raise ModelError("n_steps must be >= 1")
    d = model.dimension
    if decomp is None:
        decomp = spectral(model.sigma)
    rng = np.random.default_rng(int(seed))

    times_list, sizes_list = [], []
    for comp in model.nu.components:
        n_c = int(rng.poisson(comp.rate * horizon))
        t_c = rng.uniform(0.0, horizon, size=n_c)
        y_c = np.atleast_2d(np.asarray(comp.sampler(rng, n_c), dtype=float))
        if n_c:
            times_list.append(t_c)
            sizes_list.append(y_c.reshape(n_c, d))
    if times_list:
        jt = np.concatenate(times_list)
        jy = np.concatenate(sizes_list, axis=0)
        keep = jt > 0.0
        jt, jy = jt[keep], jy[keep]
        order = np.argsort(jt, kind="stable")
        jt, jy = jt[order], jy[order]
        # merge simultaneous jumps (probability zero, but floats can collide)
        uniq, inv = np.unique(jt, return_inverse=True)
        if uniq.size != jt.size:
            merged = np.zeros((uniq.size, d))
            np.add.at(merged, inv, jy)
            jt, jy = uniq, merged
    else:
        jt = np.zeros(0)
        jy = np.zeros((0, d))

    base = np.linspace(0.0, horizon, n_steps + 1)
    knots = np.union1d(base, jt)
    grid = TimeGrid(knots)
    jump_indices = np.searchsorted(knots, jt)

    m = decomp.rank
    if m:
        dt = np.diff(knots)
        dB = rng.standard_normal((dt.size, m)) * np.sqrt(dt)[:, None]
        B_values = np.vstack([np.zeros((1, m)), np.cumsum(dB, axis=0)])
        B = CadlagPath(grid, B_values)
        brown = B_values @ decomp.sigma_half.T
    else:
        B = None
        brown = np.zeros((knots.size, d))

    N = np.zeros((knots.size, d))
    if jump_indices.size:
        np.add.at(N, jump_indices, jy)
        N = np.cumsum(N, axis=0)
    N -= knots[:, None] * model.nu.small_compensator(d)

    X_values = knots[:, None] * model.mu + brown + N
    X = CadlagPath(grid, X_values, jump_indices)
    small = (np.linalg.norm(jy, axis=1) < SMALL_JUMP_RADIUS) if jy.size else np.zeros(0, bool)
    return SimulatedLevyPath(X, B, N, jump_indices, jy, small, int(seed), model, decomp)


# -- stopping-time partition -------------------------------------------------------


@dataclass(frozen=True)
class StoppingPartition:
    """Partition with mesh <= 2^-n capturing every jump of size >= 2^-n."""

    level: int
    times: np.ndarray

    @property
    def k_n(self):
        return self.times.size - 1


def stopping_partition(path, n):
    """t_{i+1} = inf{t > t_i : |dX(t)| >= 2^-n} ^ (t_i + 2^-n) ^ T.

    Evaluated exactly on the discrete jump record.  Accepts a
    SimulatedLevyPath (exact jump sizes) or a CadlagPath (stored jumps).
    """
    if n < 0:
        raise ModelError("partition level must be >= 0")
    if isinstance(path, SimulatedLevyPath):
        T = path.grid.horizon
        jt = path.jump_times()
        norms = np.linalg.norm(path.jump_sizes, axis=1) if jt.size else np.zeros(0)
    else:
        T = path.grid.horizon
        jt = path.grid.knots[path.jump_indices]
        norms = np.linalg.norm(path.jump_sizes(), axis=1) if jt.size else np.zeros(0)
    thresh = 2.0 ** (-n)
    big = jt[norms >= thresh]
    times = [0.0]
    t = 0.0
    while t < T:
        nxt = t + thresh
        after = big[big > t]
        if after.size:
            nxt = min(nxt, after[0])
        t = min(nxt, T)
        times.append(t)
    return StoppingPartition(int(n), np.asarray(times))


def piecewise_approx(path, partition):
    """Left-point piecewise-constant approximation X^n on the path's grid.

    Holds X(t_i^n) on [t_i^n, t_{i+1}^n) and X(T) at the horizon; every value
    change is a genuine jump of the approximation, so all are recorded.
    """
    X = path.X if isinstance(path, SimulatedLevyPath) else path
    knots = X.grid.knots
    cell = np.searchsorted(partition.times, knots, side="right") - 1
    cell = np.clip(cell, 0, partition.times.size - 2)
    anchors = partition.times[cell]
    ai = np.searchsorted(knots, anchors, side="right") - 1
    values = X.values[ai].copy()
    values[-1] = X.values[-1]
    changed = np.nonzero(np.any(values[1:] != values[:-1], axis=1))[0] + 1
    return CadlagPath(X.grid, values, changed)
