import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levylab.paths import (CadlagPath, PathError, TimeGrid, coord_replace,
                           d_star, path_from_csv, path_to_csv, perturb,
                           reverse, stop_at, stop_at_left)

from conftest import constant_path, identity_path, random_path


# -- grid / path construction ---------------------------------------------------


def test_grid_validation():
    with pytest.raises(PathError):
        TimeGrid(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(PathError):
        TimeGrid(np.array([0.1, 0.5, 1.0]))
    with pytest.raises(PathError):
        TimeGrid(np.array([0.0, np.inf]))
    g = TimeGrid.uniform(2.0, 4)
    assert g.horizon == 2.0 and g.n_steps == 4


def test_path_evaluation_right_continuous():
    g = TimeGrid.uniform(1.0, 4)
    x = CadlagPath(g, np.array([0.0, 1.0, 2.0, 3.0, 4.0]))
    assert x.value_at(0.0) == 0.0
    assert x.value_at(0.25) == 1.0       # value at the knot itself
    assert x.value_at(0.3) == 1.0        # held on [t_k, t_{k+1})
    assert x.value_at(1.0) == 4.0
    with pytest.raises(PathError):
        x.value_at(1.5)


def test_storage_left_limits_match_previous_knot(rng):
    x = random_path(rng, n_steps=12, d=2, n_jumps=3)
    left = x.storage_left_values()
    assert np.array_equal(left[1:], x.values[:-1])
    assert np.array_equal(left[0], x.values[0])


def test_jump_record_consistency(rng):
    x = random_path(rng, n_steps=12, d=2, n_jumps=3)
    sizes = x.jump_sizes()
    for idx, sz in zip(x.jump_indices, sizes):
        assert np.array_equal(sz, x.values[idx] - x.values[idx - 1])


# -- stop_at ---------------------------------------------------------------------


def test_stop_constant_path_is_identity():
    c = constant_path([3.0, -1.0])
    for t in (0.0, 0.3, 1.0):
        assert np.array_equal(stop_at(c, t).values, c.values)


def test_stop_identity_path_midpoint():
    x = identity_path(n_steps=10)
    s = stop_at(x, 0.5)
    expect = np.minimum(x.grid.knots, 0.5)
    assert np.allclose(s.values[:, 0], expect)


def test_stop_at_jump_knot_keeps_jump():
    g = TimeGrid.uniform(1.0, 4)
    v = np.array([0.0, 0.0, 1.0, 1.0, 1.0])  # jump of 1 at t = 0.5
    x = CadlagPath(g, v, np.array([2]))
    s = stop_at(x, 0.5)
    assert np.array_equal(s.values[:, 0], np.array([0.0, 0.0, 1.0, 1.0, 1.0]))
    assert 2 in s.jump_indices


def test_stop_idempotent_and_pointwise(rng):
    for _ in range(20):
        x = random_path(rng, n_steps=9, d=2, n_jumps=2)
        t = rng.uniform(0, 1)
        s = stop_at(x, t)
        assert np.array_equal(stop_at(s, t).values, s.values)
        for k, u in enumerate(x.grid.knots):
            if u < t:
                assert np.array_equal(s.values[k], x.values[k])
            else:
                assert np.array_equal(s.values[k], x.value_at(t))


def test_stop_domain_error():
    x = identity_path()
    with pytest.raises(PathError):
        stop_at(x, -0.1)
    with pytest.raises(PathError):
        stop_at(x, 1.1)


# -- perturb ----------------------------------------------------------------------


def test_perturb_zero_equals_stop(rng):
    x = random_path(rng, n_steps=11, d=3, n_jumps=2)
    t = 0.4
    p = perturb(x, t, np.zeros(3))
    s = stop_at(x, t)
    assert np.array_equal(p.values, s.values)
    assert np.array_equal(p.jump_indices, s.jump_indices)


def test_perturb_constant_from_origin():
    c = constant_path([0.0, 0.0])
    h = np.array([1.0, 2.0])
    p = perturb(c, 0.0, h)
    assert np.array_equal(p.values, np.tile(h, (c.grid.n_steps + 1, 1)))


def test_perturb_identity_path():
    x = identity_path(n_steps=10)
    p = perturb(x, 0.5, np.array([2.0]))
    expect = np.where(x.grid.knots < 0.5, x.grid.knots, 2.5)
    assert np.allclose(p.values[:, 0], expect)


def test_perturb_mid_cell_inserts_knot():
    x = identity_path(n_steps=8)  # knots at multiples of 0.125
    p = perturb(x, 0.4, np.array([2.0]))
    assert 0.4 in p.grid.knots
    assert p.value_at(0.4) == x.value_at(0.4) + 2.0
    assert p.value_at(0.395) == x.value_at(0.395)
    s = stop_at(x, 0.4)
    assert s.grid == x.grid  # stopping creates no new discontinuity


def test_perturb_dimension_mismatch():
    with pytest.raises(PathError):
        perturb(identity_path(), 0.5, np.array([1.0, 2.0]))


def test_stop_at_left_removes_recorded_jump():
    g = TimeGrid.uniform(1.0, 4)
    v = np.array([0.0, 0.0, 1.0, 1.5, 1.5])
    x = CadlagPath(g, v, np.array([2]))
    s = stop_at_left(x, 0.5)
    assert np.array_equal(s.values[:, 0], np.array([0.0, 0.0, 0.0, 0.0, 0.0]))
    s2 = stop_at_left(x, 0.75)  # no recorded jump there
    assert np.array_equal(s2.values[:, 0], np.array([0.0, 0.0, 1.0, 1.5, 1.5]))


# -- reverse ----------------------------------------------------------------------


def test_reverse_constant():
    c = constant_path([2.0])
    assert np.array_equal(reverse(c).values, c.values)


def test_reverse_identity_path():
    x = identity_path(n_steps=8)
    r = reverse(x)
    assert np.allclose(r.values[:, 0], 1.0 - r.grid.knots)


def test_reverse_involution_jump_free(rng):
    x = random_path(rng, n_steps=13, d=2, n_jumps=0)
    rr = reverse(reverse(x))
    assert np.allclose(rr.values, x.values, atol=1e-15)
    assert np.allclose(rr.grid.knots, x.grid.knots, atol=1e-15)


def test_reverse_involution_with_jumps_on_nonjump_knots(rng):
    x = random_path(rng, n_steps=16, d=1, n_jumps=3)
    rr = reverse(reverse(x))
    mask = ~x.is_jump_knot()  # the double reversal may disagree only at jumps
    assert np.allclose(rr.values[mask], x.values[mask], atol=1e-15)


# -- coord_replace / d_star ----------------------------------------------------------


def test_coord_replace_examples():
    assert np.array_equal(coord_replace([1.0, 2.0, 3.0], 1, 9.0), [1.0, 9.0, 3.0])
    v = np.array([4.0, 5.0])
    assert np.array_equal(coord_replace(v, 0, v[0]), v)
    assert np.array_equal(coord_replace([0.0, 0.0], 0, -1.0), [-1.0, 0.0])
    with pytest.raises(PathError):
        coord_replace([1.0], 1, 0.0)


def test_d_star_examples():
    z = constant_path([0.0])
    o = constant_path([1.0])
    assert d_star(0.3, z, 0.3, z) == 0.0
    assert abs(d_star(0.2, z, 0.7, z) - 0.5) < 1e-12
    assert abs(d_star(0.4, z, 0.4, o) - 1.0) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_d_star_symmetry_and_triangle(seed, t, s, u):
    rng = np.random.default_rng(seed)
    a = random_path(rng, n_steps=7, d=2, n_jumps=1)
    b = random_path(rng, n_steps=5, d=2)
    c = random_path(rng, n_steps=6, d=2, n_jumps=2)
    dab = d_star(t, a, s, b)
    assert dab >= 0.0
    assert abs(dab - d_star(s, b, t, a)) < 1e-12
    assert dab <= d_star(t, a, u, c) + d_star(u, c, s, b) + 1e-12


# -- serialization --------------------------------------------------------------------


def test_csv_roundtrip_bit_exact(rng):
    x = random_path(rng, n_steps=17, d=3, n_jumps=4)
    text = path_to_csv(x)
    y = path_from_csv(text)
    assert np.array_equal(x.grid.knots, y.grid.knots)
    assert np.array_equal(x.values, y.values)
    assert np.array_equal(x.jump_indices, y.jump_indices)
    assert np.array_equal(x.jump_sizes(), y.jump_sizes())


def test_csv_roundtrip_via_file(rng, tmp_path):
    x = random_path(rng, n_steps=5, d=1, n_jumps=1)
    target = tmp_path / "p.csv"
    with open(target, "w", newline="") as fh:
        path_to_csv(x, fh)
    with open(target) as fh:
        y = path_from_csv(fh)
    assert np.array_equal(x.values, y.values)


def test_paths_immutable(rng):
    x = random_path(rng)
    with pytest.raises(ValueError):
        x.values[0] = 99.0
