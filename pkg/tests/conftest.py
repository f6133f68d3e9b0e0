import numpy as np
import pytest

from levylab import levy
from levylab.mc import path_seed
from levylab.paths import CadlagPath, TimeGrid


def random_path(rng, n_steps=16, d=1, horizon=1.0, n_jumps=0):
    """A random step path; jumps are marked at random interior knots."""
    grid = TimeGrid.uniform(horizon, n_steps)
    values = np.cumsum(rng.standard_normal((n_steps + 1, d)), axis=0) * 0.3
    jumps = np.sort(rng.choice(np.arange(1, n_steps + 1), size=n_jumps, replace=False)) \
        if n_jumps else np.zeros(0, dtype=int)
    return CadlagPath(grid, values, jumps)


def constant_path(value, n_steps=8, horizon=1.0):
    value = np.atleast_1d(np.asarray(value, dtype=float))
    grid = TimeGrid.uniform(horizon, n_steps)
    return CadlagPath(grid, np.tile(value, (n_steps + 1, 1)))


def identity_path(n_steps=8, horizon=1.0):
    grid = TimeGrid.uniform(horizon, n_steps)
    return CadlagPath(grid, grid.knots.copy())


def brownian_model(d=1, scale=1.0):
    return levy.LevyModel(np.zeros(d), scale * np.eye(d))


def brownian_paths(n_steps, n_paths, seed, d=1):
    model = brownian_model(d)
    return [levy.simulate(model, n_steps, path_seed(seed, i)).B
            for i in range(n_paths)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
