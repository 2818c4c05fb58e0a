import numpy as np
import pytest

from choquard_gs.energy import energy_value, fiber_residual_from_qdg, q_boundary, qdg
from choquard_gs.grid import Field, gaussian_field, random_smooth_field, shift
from choquard_gs.nehari import (
    NehariProjectionError,
    check_J_conditions,
    fiber_scan,
    fiber_scan_csv,
    ground_level,
    nehari_t_from_qdg,
    project_to_nehari,
)


def test_closed_form_projection_without_gamma(ctx_const, rng):
    u = random_smooth_field(ctx_const.grid, rng)
    q, d, g = qdg(ctx_const, u)
    assert g == 0.0
    p = ctx_const.params.p
    t_star, _ = project_to_nehari(ctx_const, u)
    assert t_star == pytest.approx((q / d) ** (1.0 / (2 * p - 2)), rel=1e-10)


def test_projection_residual_small(ctx_gamma, rng):
    for _ in range(10):
        u = random_smooth_field(ctx_gamma.grid, rng)
        t_star, u_star = project_to_nehari(ctx_gamma, u)
        q, d, g = qdg(ctx_gamma, u_star)
        resid = fiber_residual_from_qdg(ctx_gamma, q, d, g)
        assert abs(resid) <= 1e-10 * q


def test_projection_of_manifold_point_is_identity(ctx_gamma, rng):
    u = random_smooth_field(ctx_gamma.grid, rng)
    _, u_star = project_to_nehari(ctx_gamma, u)
    t_again, _ = project_to_nehari(ctx_gamma, u_star)
    assert abs(t_again - 1.0) <= 1e-8


def test_projection_scaling_rule(ctx_gamma, rng):
    u = random_smooth_field(ctx_gamma.grid, rng)
    t1, _ = project_to_nehari(ctx_gamma, u)
    t3, _ = project_to_nehari(ctx_gamma, Field(ctx_gamma.grid, 3.0 * u.values))
    assert t3 == pytest.approx(t1 / 3.0, rel=1e-9)


def test_projection_commutes_with_shift(ctx_gamma, rng):
    u = random_smooth_field(ctx_gamma.grid, rng)
    z = [2.0]
    _, a = project_to_nehari(ctx_gamma, shift(u, z))
    _, b = project_to_nehari(ctx_gamma, u)
    b = shift(b, z)
    assert np.max(np.abs(a.values - b.values)) <= 1e-12 * np.max(np.abs(b.values))


def test_projection_rejects_zero(ctx_const):
    with pytest.raises(NehariProjectionError):
        project_to_nehari(ctx_const, Field(ctx_const.grid, np.zeros(ctx_const.grid.shape)))


def test_scalar_solver_rejects_degenerate():
    with pytest.raises(NehariProjectionError):
        nehari_t_from_qdg(1.0, 0.0, 0.5, 2.0, 3.0)
    with pytest.raises(NehariProjectionError):
        nehari_t_from_qdg(0.0, 1.0, 0.0, 2.0, 3.0)


def test_scalar_solver_against_bisection_oracle(rng):
    # frozen oracle: plain bisection on the fiber stationarity scalar
    p, qe = 2.0, 3.0
    for _ in range(50):
        q = float(rng.uniform(0.1, 10.0))
        d = float(rng.uniform(0.1, 10.0))
        g = float(rng.uniform(0.0, 10.0))

        def resid(t):
            return q - t ** (2 * p - 2) * d + t ** (qe - 2) * g

        lo, hi = 1e-9, 1.0
        while resid(hi) > 0:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if resid(mid) > 0:
                lo = mid
            else:
                hi = mid
        oracle = 0.5 * (lo + hi)
        assert nehari_t_from_qdg(q, d, g, p, qe) == pytest.approx(oracle, rel=1e-9)


def test_fiber_scan_reference_maximum(ctx_const, rng):
    # p = 2, Gamma = 0: max of E(t u) equals Q^2/(4 D)
    u = random_smooth_field(ctx_const.grid, rng)
    q, d, _ = qdg(ctx_const, u)
    t_star, _ = project_to_nehari(ctx_const, u)
    scan = fiber_scan(ctx_const, u, np.geomspace(t_star / 4, 4 * t_star, 41))
    assert np.max(scan.e_values) <= q * q / (4 * d) + 1e-12
    peak = energy_value(ctx_const, Field(ctx_const.grid, t_star * u.values))
    assert peak == pytest.approx(q * q / (4 * d), rel=1e-11)


def test_fiber_scan_sign_pattern(ctx_gamma, rng):
    for _ in range(10):
        u = random_smooth_field(ctx_gamma.grid, rng)
        t_star, u_star = project_to_nehari(ctx_gamma, u)
        scan = fiber_scan(ctx_gamma, u, np.geomspace(t_star / 8, 8 * t_star, 33))
        assert scan.slope_sign_ok
        assert scan.max_bracket_contains_t_star()
        peak = energy_value(ctx_gamma, u_star)
        assert np.all(scan.e_values <= peak * (1 + 1e-12))


def test_fiber_scan_rejects_nonpositive_grid(ctx_const, rng):
    u = random_smooth_field(ctx_const.grid, rng)
    with pytest.raises(ValueError):
        fiber_scan(ctx_const, u, [-1.0, 1.0])


def test_fiber_scan_csv_format(ctx_gamma, rng):
    u = random_smooth_field(ctx_gamma.grid, rng)
    scan = fiber_scan(ctx_gamma, u, [0.5, 1.0, 2.0])
    text = fiber_scan_csv(ctx_gamma, u, scan)
    lines = text.strip().splitlines()
    assert lines[0] == "t,energy,residual"
    assert len(lines) == 4
    assert all(len(line.split(",")) == 3 for line in lines[1:])


def test_ground_level_single_candidate(ctx_const):
    u = gaussian_field(ctx_const.grid, [0.0], 2.0)
    c, argmin = ground_level(ctx_const, [u])
    _, u_star = project_to_nehari(ctx_const, u)
    assert c == pytest.approx(energy_value(ctx_const, u_star), rel=1e-12)
    assert np.array_equal(argmin.values, u_star.values)


def test_ground_level_shift_closed_candidates(ctx_const):
    u = gaussian_field(ctx_const.grid, [0.0], 2.0)
    c1, _ = ground_level(ctx_const, [u])
    c2, _ = ground_level(ctx_const, [u, shift(u, [4.0]), shift(u, [-6.0])])
    assert c2 == pytest.approx(c1, rel=1e-12)


def test_ground_level_positive_randomized(ctx_gamma, rng):
    for _ in range(10):
        cands = [random_smooth_field(ctx_gamma.grid, rng) for _ in range(3)]
        c, _ = ground_level(ctx_gamma, cands)
        assert c > 0


def test_ground_level_empty_and_degenerate(ctx_const):
    with pytest.raises(ValueError):
        ground_level(ctx_const, [])
    zero = Field(ctx_const.grid, np.zeros(ctx_const.grid.shape))
    with pytest.raises(NehariProjectionError):
        ground_level(ctx_const, [zero])


def test_j_conditions_on_random_fields(ctx_gamma, rng):
    fields = [random_smooth_field(ctx_gamma.grid, rng) for _ in range(50)]
    rep = check_J_conditions(ctx_gamma, fields)
    assert rep.all_ok
    assert rep.j3_violations == 0
    assert rep.radius > 0
    assert rep.j1_min_ratio >= 1.0 - 1e-9


def test_j2_growth_is_monotone(ctx_gamma, rng):
    # the nonlinear part over t^q grows across each sampled decade
    p, qe = ctx_gamma.params.p, ctx_gamma.params.q
    for _ in range(10):
        u = random_smooth_field(ctx_gamma.grid, rng)
        _, d, g = qdg(ctx_gamma, u)
        vals = [t ** (2 * p - qe) * d / (2 * p) - g / qe for t in (10, 100, 1000)]
        assert vals[2] > vals[1] > vals[0]


def test_j_conditions_reject_zero_sample(ctx_gamma):
    zero = Field(ctx_gamma.grid, np.zeros(ctx_gamma.grid.shape))
    with pytest.raises(ValueError):
        check_J_conditions(ctx_gamma, [zero])


def test_projection_unique_slope_sign_change(ctx_gamma, rng):
    # discrete fiber slope changes sign exactly once on refinements of the grid
    u = random_smooth_field(ctx_gamma.grid, rng)
    t_star, _ = project_to_nehari(ctx_gamma, u)
    for n_pts in (17, 65, 257):
        scan = fiber_scan(ctx_gamma, u, np.geomspace(t_star / 5, 5 * t_star, n_pts))
        d = np.diff(scan.e_values)
        signs = np.sign(d[d != 0])
        flips = np.sum(signs[1:] != signs[:-1])
        assert flips == 1
