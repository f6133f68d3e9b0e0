"""Cadlag step paths on a finite time grid and the path-space operators.

A path is right-continuous and piecewise constant between knots: x(t) equals
the stored value at the largest knot <= t.  The left limit at a knot, in the
step-function sense, is the value at the previous knot; the recorded jumps
carry the sizes of genuine discontinuities of the modelled process, and the
pre-jump value at a jump knot is value - jump_size.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np


class PathError(ValueError):
    """Domain error on a path operation (bad time, dimension mismatch, ...)."""


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing knots t_0 = 0 < ... < t_K = T."""

    knots: np.ndarray

    def __post_init__(self):
        knots = _readonly(np.atleast_1d(self.knots))
        object.__setattr__(self, "knots", knots)
        if knots.ndim != 1 or knots.size < 2:
            raise PathError("grid needs at least two knots")
        if knots[0] != 0.0:
            raise PathError("first knot must be 0")
        if not np.all(np.isfinite(knots)):
            raise PathError("knots must be finite")
        if np.any(np.diff(knots) <= 0):
            raise PathError("knots must be strictly increasing")

    @classmethod
    def uniform(cls, horizon, n_steps):
        if n_steps < 1 or horizon <= 0:
            raise PathError("need n_steps >= 1 and horizon > 0")
        return cls(np.linspace(0.0, float(horizon), n_steps + 1))

    @property
    def horizon(self):
        return float(self.knots[-1])

    @property
    def n_steps(self):
        return self.knots.size - 1

    def index_at(self, t):
        """Largest k with knots[k] <= t."""
        if t < 0.0 or t > self.horizon:
            raise PathError(f"time {t} outside [0, {self.horizon}]")
        return int(np.searchsorted(self.knots, t, side="right") - 1)

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.knots, other.knots)


@dataclass(frozen=True)
class CadlagPath:
    """d-dimensional step path: values[k] holds on [t_k, t_{k+1}).

    jump_indices marks knots where the modelled process is discontinuous;
    jump sizes are kept consistent with storage, i.e. equal to
    values[k] - values[k-1] at each marked knot.
    """

    grid: TimeGrid
    values: np.ndarray
    jump_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if v.shape[0] == 1 and self.grid.knots.size != 1 and v.shape[1] == self.grid.knots.size:
            v = v.T
        object.__setattr__(self, "values", _readonly(v))
        ji = np.asarray(self.jump_indices, dtype=int)
        ji = np.unique(ji)
        object.__setattr__(self, "jump_indices", ji)
        if self.values.shape[0] != self.grid.knots.size:
            raise PathError("one value per knot required")
        if ji.size and (ji.min() < 1 or ji.max() >= self.grid.knots.size):
            raise PathError("jump indices must hit knots 1..K")
        ji.setflags(write=False)

    # -- basic accessors ----------------------------------------------------

    @property
    def dimension(self):
        return self.values.shape[1]

    @property
    def horizon(self):
        return self.grid.horizon

    def value_at(self, t):
        return self.values[self.grid.index_at(t)]

    def __call__(self, t):
        return self.value_at(t)

    def jump_sizes(self):
        """Stored-value increments at the recorded jump knots."""
        if not self.jump_indices.size:
            return np.zeros((0, self.dimension))
        return self.values[self.jump_indices] - self.values[self.jump_indices - 1]

    def pre_jump_values(self):
        """values with recorded jumps removed: the process left limit at knots.

        At non-jump knots the modelled process is continuous so the left
        limit equals the stored value; x(0-) := x(0).
        """
        out = self.values.copy()
        if self.jump_indices.size:
            out[self.jump_indices] = self.values[self.jump_indices - 1]
        return out

    def storage_left_values(self):
        """Step-function left limits: values shifted by one knot."""
        out = np.empty_like(self.values)
        out[0] = self.values[0]
        out[1:] = self.values[:-1]
        return out

    def is_jump_knot(self):
        mask = np.zeros(self.grid.knots.size, dtype=bool)
        mask[self.jump_indices] = True
        return mask

    def _replace_values(self, values, jump_indices):
        return CadlagPath(self.grid, values, jump_indices)


# -- operators ----------------------------------------------------------------


def stop_at(x, t):
    """Freeze the path at its time-t value: x(s) for s < t, x(t) for s >= t."""
    return perturb(x, t, np.zeros(x.dimension))


def perturb(x, t, h):
    """Vertical perturbation: x(s) for s < t, x(t) + h for s >= t.

    A nonzero bump at a non-knot time creates a discontinuity the original
    grid cannot carry, so t is inserted as a knot in that case; otherwise
    (h = 0, or t already a knot) the grid is unchanged, which keeps
    perturb(x, t, 0) identical to stop_at(x, t).
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.shape != (x.dimension,):
        raise PathError(f"perturbation has dimension {h.shape}, path has {x.dimension}")
    k_stop = x.grid.index_at(t)  # raises outside [0, T]
    ks = int(np.searchsorted(x.grid.knots, t, side="left"))
    off_knot = ks == x.grid.knots.size or x.grid.knots[ks] != t
    if off_knot and np.any(h != 0.0):
        knots = np.insert(x.grid.knots, ks, t)
        new_values = np.insert(x.values, ks, x.values[k_stop], axis=0)
        new_values[ks:] = x.values[k_stop] + h
        keep = x.jump_indices[x.jump_indices < ks]
        if np.any(new_values[ks] != new_values[ks - 1]):
            keep = np.append(keep, ks)
        return CadlagPath(TimeGrid(knots), new_values, keep)
    new_values = x.values.copy()
    new_values[ks:] = x.values[k_stop] + h
    keep = x.jump_indices[x.jump_indices < ks]
    if 1 <= ks <= x.grid.n_steps and np.any(new_values[ks] != new_values[ks - 1]):
        keep = np.append(keep, ks)
    return x._replace_values(new_values, keep)


def stop_at_left(x, t):
    """Stop at the process left limit: x(s) for s < t, x(t-) for s >= t.

    x(t-) removes the recorded jump when t is a jump knot and equals x(t)
    otherwise (the step storage of a continuous motion has no real jump).
    """
    k = x.grid.index_at(t)
    delta = np.zeros(x.dimension)
    if t == x.grid.knots[k] and k in x.jump_indices:
        delta = x.values[k] - x.values[k - 1]
    return perturb(x, t, -delta)


def reverse(x):
    """Time reversal through left limits: result(t) = x((T - t)-)."""
    new_knots = x.horizon - x.grid.knots[::-1]
    new_knots = new_knots - new_knots[0]  # exact 0 at the first knot
    new_values = x.pre_jump_values()[::-1].copy()
    K = x.grid.n_steps
    ji = K - x.jump_indices
    ji = ji[(ji >= 1) & (ji <= K)]
    changed = np.any(new_values[ji] != new_values[ji - 1], axis=1) if ji.size else np.zeros(0, bool)
    return CadlagPath(TimeGrid(new_knots), new_values, ji[changed])


def coord_replace(v, j, y):
    """Replace coordinate j (0-based) of a vector, leaving the rest."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if not 0 <= j < v.size:
        raise PathError(f"coordinate {j} out of range for dimension {v.size}")
    out = v.copy()
    out[j] = y
    return out


def d_star(t, x, s, y):
    """Pseudo-metric |t - s| + sup-distance of the stopped paths.

    The sup distance is taken over the union of the two knot sets with the
    max norm on R^d; step paths attain their sup at knots, so this is exact.
    """
    if x.dimension != y.dimension:
        raise PathError("paths must share dimension")
    xs, ys = stop_at(x, t), stop_at(y, s)
    grid = np.union1d(xs.grid.knots, ys.grid.knots)
    grid = grid[(grid >= 0.0) & (grid <= min(xs.horizon, ys.horizon))]
    kx = np.searchsorted(xs.grid.knots, grid, side="right") - 1
    ky = np.searchsorted(ys.grid.knots, grid, side="right") - 1
    diff = np.abs(xs.values[kx] - ys.values[ky]).max() if grid.size else 0.0
    return abs(t - s) + float(diff)


# -- serialization --------------------------------------------------------------


CSV_HEADER_PREFIX = ["knot_index", "time"]


def path_to_csv(path, fileobj=None):
    """Write columns (knot_index, time, x_1..x_d, is_jump); floats via repr.

    repr round-trips IEEE doubles exactly, which makes the CSV bit-exact.
    """
    own = fileobj is None
    if own:
        fileobj = io.StringIO()
    w = csv.writer(fileobj, lineterminator="\n")
    d = path.dimension
    w.writerow(CSV_HEADER_PREFIX + [f"x_{i + 1}" for i in range(d)] + ["is_jump"])
    jumps = path.is_jump_knot()
    for k, t in enumerate(path.grid.knots):
        row = [k, repr(float(t))] + [repr(float(v)) for v in path.values[k]]
        row.append(int(jumps[k]))
        w.writerow(row)
    if own:
        return fileobj.getvalue()
    return None


def path_from_csv(source):
    """Inverse of path_to_csv; accepts a string or a file object."""
    if isinstance(source, str):
        source = io.StringIO(source)
    rows = list(csv.reader(source))
    header = rows[0]
    d = len(header) - 3
    knots, values, jump_idx = [], [], []
    for row in rows[1:]:
        if not row:
            continue
        knots.append(float(row[1]))
        values.append([float(v) for v in row[2:2 + d]])
        if int(row[-1]):
            jump_idx.append(int(row[0]))
    return CadlagPath(TimeGrid(np.array(knots)), np.array(values), np.array(jump_idx, dtype=int))
