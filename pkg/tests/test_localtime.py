import numpy as np
import pytest

from levylab import localtime as lt
from levylab.levy import JumpSpec, LevyModel, atom, simulate
from levylab.mc import path_seed
from levylab.paths import CadlagPath, TimeGrid

from conftest import brownian_paths


SIN = lt.space_integrand(lambda X: np.sin(X[:, 0]),
                         dg={0: lambda X: np.cos(X[:, 0])}, name="sin")
HALF_SQ = lt.space_integrand(lambda X: 0.5 * X[:, 0] ** 2,
                             dg={0: lambda X: X[:, 0]}, name="x^2/2")


# -- forward/backward representation -------------------------------------------------


def test_constant_integrand_telescopes_bitwise():
    paths = brownian_paths(512, 32, seed=1)
    est = lt.forward_backward_integral(lt.CONSTANT_ONE, None, paths)
    assert all(v == 0.0 for v in est.per_path)
    assert est.value == 0.0
    # split sums cancel only up to float reassociation
    assert abs(est.forward_mean + est.backward_mean) < 1e-12


def test_coordinate_integrand_closed_form():
    paths = brownian_paths(4096, 128, seed=2)
    est = lt.forward_backward_integral(lt.coordinate_integrand(0), None, paths)
    assert abs(est.value + 1.0) < 3.0 * est.std_error + 0.01
    # per-path value is exactly -sum (dB)^2
    b = paths[0].values[:, 0]
    assert abs(est.per_path[0] + np.sum(np.diff(b) ** 2)) < 1e-12


def test_rms_shrinks_with_refinement():
    rms = {}
    for K in (512, 2048):
        paths = brownian_paths(K, 128, seed=3)
        est = lt.forward_backward_integral(lt.coordinate_integrand(0), None, paths)
        rms[K] = float(np.sqrt(np.mean((est.per_path + 1.0) ** 2)))
    ratio = rms[2048] / rms[512]
    assert 0.35 < ratio < 0.92  # K^{-1/2} rate with generous slack


def test_linearity_exact():
    paths = brownian_paths(256, 8, seed=4)
    a, b = 2.5, -1.25
    combo = lt.space_integrand(lambda X: a * np.sin(X[:, 0]) + b * 0.5 * X[:, 0] ** 2)
    e_combo = lt.forward_backward_integral(combo, None, paths)
    e_sin = lt.forward_backward_integral(SIN, None, paths)
    e_sq = lt.forward_backward_integral(HALF_SQ, None, paths)
    assert np.allclose(e_combo.per_path, a * e_sin.per_path + b * e_sq.per_path,
                       atol=1e-12)


def test_partial_time_interval():
    paths = brownian_paths(1024, 64, seed=5)
    est = lt.forward_backward_integral(lt.coordinate_integrand(0), None, paths, t=0.5)
    assert abs(est.value + 0.5) < 3.0 * est.std_error + 0.01
    assert est.t == 0.5


def test_y_argument_and_violation_label():
    model = LevyModel(np.zeros(1), np.eye(1), JumpSpec((atom(2.0, [0.4]),)))
    sims = [simulate(model, 256, path_seed(9, i)) for i in range(16)]
    Ys = [s.n_path() for s in sims]
    Bs = [s.B for s in sims]
    # integrand reading the jump state: F(s, w, x) = x * w(s-)
    F = lt.Integrand(vec=lambda t, yleft, X: X[:, 0] * yleft[:, 0], name="x*y")
    est = lt.forward_backward_integral(F, Ys, Bs)
    assert not est.hypothesis_violating
    bad = lt.forward_backward_integral(F, Bs, Bs, y_independent=False)
    assert bad.hypothesis_violating


def test_scalar_fallback_matches_vectorized():
    paths = brownian_paths(64, 4, seed=6)
    F_scalar = lt.Integrand(fn=lambda s, w, x: float(np.sin(x[0])), name="sin-slow")
    e1 = lt.forward_backward_integral(F_scalar, None, paths)
    e2 = lt.forward_backward_integral(SIN, None, paths)
    assert np.allclose(e1.per_path, e2.per_path, atol=1e-12)


# -- derivative identity oracle ---------------------------------------------------------


def test_identity_constant_is_zero():
    paths = brownian_paths(256, 8, seed=7)
    F = lt.space_integrand(lambda X: np.ones(X.shape[0]),
                           dg={0: lambda X: np.zeros(X.shape[0])})
    est = lt.derivative_identity_integral(F, None, paths)
    assert est.value == 0.0


def test_identity_coordinate_gives_minus_t():
    paths = brownian_paths(256, 8, seed=8)
    est = lt.derivative_identity_integral(lt.coordinate_integrand(0), None, paths)
    assert abs(est.value + 1.0) < 1e-12
    est_half = lt.derivative_identity_integral(lt.coordinate_integrand(0), None,
                                               paths, t=0.5)
    assert abs(est_half.value + 0.5) < 1e-12


def test_oracle_agreement_identity_vs_fb():
    paths = brownian_paths(4096, 256, seed=9)
    for F in (SIN, HALF_SQ):
        fb = lt.forward_backward_integral(F, None, paths)
        ident = lt.derivative_identity_integral(F, None, paths)
        tol = 3.0 * float(np.hypot(fb.std_error, ident.std_error))
        assert abs(fb.value - ident.value) < tol, F.name


# -- local-time surface -------------------------------------------------------------------


def test_tanaka_surface_monotone_and_supported():
    b = brownian_paths(2048, 1, seed=10)[0]
    lo, hi = b.values.min() - 0.5, b.values.max() + 0.5
    grid = np.linspace(lo, hi, 101)
    surf = lt.local_time_surface(b, grid, method="tanaka")
    assert np.all(np.diff(surf.L, axis=1) >= -1e-12)
    outside = np.concatenate([surf.L[grid < b.values.min() - 1e-9][:, -1],
                              surf.L[grid > b.values.max() + 1e-9][:, -1]])
    assert np.all(np.abs(outside) < 1e-12)


def test_occupation_identity():
    b = brownian_paths(2 ** 14, 1, seed=11)[0]
    lo, hi = b.values.min() - 1.0, b.values.max() + 1.0
    grid = np.linspace(lo, hi, 256)
    surf = lt.local_time_surface(b, grid, method="tanaka")
    assert abs(surf.occupation_mass() - 1.0) < 0.05
    occ = lt.local_time_surface(b, grid, method="occupation")
    assert abs(occ.occupation_mass() - 1.0) < 0.05


def test_tanaka_mean_at_origin():
    # E L^0_1 = E|B(1)| = sqrt(2/pi); the Tanaka estimator is unbiased
    M = 4000
    vals = []
    for b in brownian_paths(128, M, seed=12):
        surf = lt.local_time_surface(b, np.array([0.0]), method="tanaka")
        vals.append(surf.L[0, -1])
    vals = np.array(vals)
    target = np.sqrt(2.0 / np.pi)
    assert abs(vals.mean() - target) < 3.0 * vals.std() / np.sqrt(M)


def test_surface_estimators_cross_check():
    b = brownian_paths(2 ** 13, 1, seed=13)[0]
    grid = np.linspace(-2.0, 2.0, 81)
    tan = lt.local_time_surface(b, grid, method="tanaka")
    occ = lt.local_time_surface(b, grid, method="occupation")
    # kernel estimate converges to the Tanaka value; loose pathwise agreement
    assert np.abs(tan.L[:, -1] - occ.L[:, -1]).mean() < 0.15


# -- simple-functional integral --------------------------------------------------------------


def test_simple_integral_zero_coeffs():
    b = brownian_paths(512, 1, seed=14)[0]
    grid = np.linspace(-2, 2, 11)
    surf = lt.local_time_surface(b, grid)
    val = lt.simple_integral(np.zeros((1, 10)), np.array([0.0, 1.0]), grid, surf, 1.0)
    assert val == 0.0


def test_simple_integral_full_range_telescopes():
    b = brownian_paths(512, 1, seed=15)[0]
    lo, hi = b.values.min() - 1.0, b.values.max() + 1.0
    grid = np.linspace(lo, hi, 21)
    surf = lt.local_time_surface(b, grid)
    val = lt.simple_integral(np.ones((1, 20)), np.array([0.0, 1.0]), grid, surf, 1.0)
    # telescopes to L^{max} - L^{min} = 0 beyond the path range
    assert abs(val) < 1e-10


def test_simple_integral_single_cell_vs_occupation():
    b = brownian_paths(2 ** 13, 1, seed=16)[0]
    grid = np.linspace(-1.0, 1.0, 41)
    tan = lt.local_time_surface(b, grid, method="tanaka")
    occ = lt.local_time_surface(b, grid, method="occupation")
    s = np.array([0.25, 0.75])
    x = grid[18:21:2]  # one space cell
    coeff = np.ones((1, 1))
    v1 = lt.simple_integral(coeff, s, x, tan, 1.0)
    v2 = lt.simple_integral(coeff, s, x, occ, 1.0)
    assert abs(v1 - v2) < 0.2


def test_simple_oracle_triangle():
    paths = brownian_paths(4096, 128, seed=17)
    for F in (SIN, HALF_SQ):
        fb = lt.forward_backward_integral(F, None, paths)
        simple = lt.simple_oracle_estimate(F, paths)
        ident = lt.derivative_identity_integral(F, None, paths)
        for a, b in ((fb, simple), (ident, simple)):
            tol = 3.0 * float(np.hypot(a.std_error, b.std_error)) + 1e-3
            assert abs(a.value - b.value) < tol, F.name


def test_simple_integral_grid_validation():
    b = brownian_paths(128, 1, seed=18)[0]
    grid = np.linspace(-1, 1, 11)
    surf = lt.local_time_surface(b, grid)
    with pytest.raises(lt.LocalTimeError):
        lt.simple_integral(np.ones((1, 10)), np.array([0.0, 1.0]),
                           np.linspace(-1, 1.05, 11), surf, 1.0)


# -- displaced integral ------------------------------------------------------------------


def test_displaced_empty_interval():
    paths = brownian_paths(256, 4, seed=19)
    F = lambda s, z, n, x: float(x[0])
    est = lt.displaced_integral(F, None, None, paths, 0.5, 0.5, 0)
    assert est.value == 0.0


def test_displaced_reduces_to_forward_backward():
    paths = brownian_paths(512, 16, seed=20)
    Fd = lambda s, z, n, x: float(np.sin(x[0]))
    est_d = lt.displaced_integral(Fd, None, None, paths, 0.0, 1.0, 0)
    est_fb = lt.forward_backward_integral(SIN, None, paths)
    assert np.allclose(est_d.per_path, est_fb.per_path, atol=1e-12)


def test_displaced_closed_form():
    paths = brownian_paths(4096, 128, seed=21)
    F = lambda s, z, n, x: float(x[0])
    est = lt.displaced_integral(F, None, None, paths, 0.25, 1.0, 0)
    assert abs(est.value + 0.75) < 3.0 * est.std_error + 0.01


def test_displaced_rejects_reversed_interval():
    paths = brownian_paths(64, 2, seed=22)
    with pytest.raises(lt.LocalTimeError):
        lt.displaced_integral(lambda s, z, n, x: 1.0, None, None, paths, 0.8, 0.2, 0)


# -- the norm ---------------------------------------------------------------------------


def test_norm_zero_integrand():
    paths = brownian_paths(256, 8, seed=23)
    Z = lt.space_integrand(lambda X: np.zeros(X.shape[0]))
    assert lt.local_time_norm(Z, None, paths) == 0.0


def test_norm_constant_one_closed_form():
    paths = brownian_paths(4096, 2000, seed=24)
    val = lt.local_time_norm(lt.CONSTANT_ONE, None, paths)
    target = 2.0 + 2.0 * np.sqrt(2.0 / np.pi)
    assert abs(val - target) / target < 0.05


def test_norm_dominated_by_sup_norm():
    # |F|_L <= C |F|_inf with C the norm of the constant one
    paths = brownian_paths(1024, 500, seed=25)
    c_const = lt.local_time_norm(lt.CONSTANT_ONE, None, paths)
    rng = np.random.default_rng(0)
    for _ in range(3):
        a, b = rng.uniform(-1, 1, size=2)
        G = lt.space_integrand(lambda X, a=a, b=b: np.clip(a * X[:, 0] + b, -1.0, 1.0))
        assert lt.local_time_norm(G, None, paths) <= c_const + 1e-9


def test_norm_needs_ensemble():
    paths = brownian_paths(128, 1, seed=26)
    with pytest.raises(lt.LocalTimeError):
        lt.local_time_norm(lt.CONSTANT_ONE, None, paths)


def test_surface_csv_export():
    b = brownian_paths(64, 1, seed=30)[0]
    grid = np.linspace(-1.0, 1.0, 5)
    surf = lt.local_time_surface(b, grid)
    text = lt.surface_to_csv(surf)
    lines = text.strip().split("\n")
    assert lines[0] == "x,t,L"
    assert len(lines) == 1 + 5 * 65
    x0, t0, l0 = lines[1].split(",")
    assert float(x0) == grid[0] and float(t0) == 0.0 and float(l0) == surf.L[0, 0]


def test_identity_vs_fb_pathwise_mean_abs_difference():
    paths = brownian_paths(4096, 256, seed=31)
    fb = lt.forward_backward_integral(HALF_SQ, None, paths)
    ident = lt.derivative_identity_integral(HALF_SQ, None, paths)
    mad = float(np.mean(np.abs(fb.per_path - ident.per_path)))
    combined = 3.0 * float(np.hypot(fb.std_error, ident.std_error))
    assert mad <= combined


def test_displaced_with_jump_component_matches_identity_oracle():
    # real pure-jump N riding inside the integrand over a shifted window:
    # the displaced two-sided sum must match the weak-derivative identity
    # -int_s^t d_x F(s, Z, N(r-), B_s(r)) dr
    model = LevyModel(np.zeros(1), np.eye(1), JumpSpec((atom(3.0, [0.4]),)))
    sims = [simulate(model, 2048, path_seed(51 << 20, i)) for i in range(128)]
    Bs = [s.B for s in sims]
    Ns = [s.n_path() for s in sims]
    s0, t0 = 0.25, 0.875
    F = lambda s, z, n, x: float((1.0 + n[0]) * x[0])
    est = lt.displaced_integral(F, None, Ns, Bs, s0, t0, 0)
    vals = []
    for sim in sims:
        knots = sim.grid.knots
        ks, kt = sim.grid.index_at(s0), sim.grid.index_at(t0)
        nleft = sim.n_path().pre_jump_values()[:, 0]
        dt = np.diff(knots)
        vals.append(-float(np.dot(1.0 + nleft[ks:kt], dt[ks:kt])))
    from levylab.mc import ensemble_mean_se
    mean, se = ensemble_mean_se(vals)
    assert abs(est.value - mean) <= 3.0 * float(np.hypot(est.std_error, se))
