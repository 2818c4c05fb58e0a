import numpy as np
import pytest

from choquard_gs.energy import (
    brezis_lieb_check,
    build_context,
    d_value,
    directional_derivative_fd,
    dual_grad_norm,
    energy,
    energy_from_qdg,
    energy_per,
    energy_value,
    estimate_d_bound,
    fiber_residual_from_qdg,
    gamma_integral,
    grad_energy,
    q_boundary,
    qdg,
)
from choquard_gs.grid import Field, gaussian_field, l2_inner, l2_norm2, random_smooth_field, shift
from conftest import const_potential, gamma_potential, make_params


def zero_field(ctx):
    return Field(ctx.grid, np.zeros(ctx.grid.shape))


def test_q_boundary_constant_field(ctx_const):
    # symbol at zero frequency cancels the mass: Q = V0 c^2 (2L)^N
    g = ctx_const.grid
    c = 1.5
    q = q_boundary(ctx_const, Field(g, np.full(g.shape, c)))
    assert q == pytest.approx(1.0 * c**2 * g.box_volume, rel=1e-12)


def test_q_boundary_cosine_mode(ctx_const):
    g = ctx_const.grid
    m = ctx_const.params.m
    xi1 = np.pi / g.L
    u = Field(g, np.cos(xi1 * g.axis_coords()))
    expected = (np.sqrt(xi1**2 + m**2) - m + 1.0) * g.box_volume / 2.0
    assert q_boundary(ctx_const, u) == pytest.approx(expected, rel=1e-12)


def test_q_boundary_zero(ctx_const):
    assert q_boundary(ctx_const, zero_field(ctx_const)) == 0.0


def test_q_boundary_positive_definite(ctx_const, rng):
    for _ in range(10):
        u = random_smooth_field(ctx_const.grid, rng)
        assert q_boundary(ctx_const, u) > 0


def test_d_zero_and_homogeneity(ctx_const, rng):
    assert d_value(ctx_const, zero_field(ctx_const)) == 0.0
    u = random_smooth_field(ctx_const.grid, rng)
    p = ctx_const.params.p
    d1 = d_value(ctx_const, u)
    d2 = d_value(ctx_const, Field(ctx_const.grid, 2.0 * u.values))
    assert d2 == pytest.approx(2.0 ** (2 * p) * d1, rel=1e-11)
    assert d1 >= 0


def test_d_matches_brute_double_sum():
    params = make_params(n=16, L=4.0)
    ctx = build_context(params, const_potential())
    rng = np.random.default_rng(5)
    u = Field(ctx.grid, rng.standard_normal(16))
    h = ctx.grid.h
    gpow = np.abs(u.values) ** ctx.params.p
    S = ctx.kernel.kernel_samples
    brute = 0.0
    for i in range(16):
        for j in range(16):
            brute += h * h * S[(i - j) % 16] * gpow[i] * gpow[j]
    assert d_value(ctx, u) == pytest.approx(brute, abs=1e-10, rel=1e-10)


def test_d_shift_equivariance(ctx_const, rng):
    u = random_smooth_field(ctx_const.grid, rng)
    moved = shift(u, [5.0])
    assert d_value(ctx_const, moved) == pytest.approx(d_value(ctx_const, u), rel=1e-12)


def test_energy_zero_field(ctx_gamma):
    rep = energy(ctx_gamma, zero_field(ctx_gamma))
    assert rep.q_val == rep.d_val == rep.gamma_term == rep.e_val == 0.0
    assert rep.e_per_val == 0.0 and rep.grad_norm == 0.0


def test_energy_fiber_closed_form(ctx_const, rng):
    # Gamma = 0: E(t u) = t^2 Q/2 - t^(2p) D/(2p) at twenty scalings
    u = random_smooth_field(ctx_const.grid, rng)
    q, d, g = qdg(ctx_const, u)
    assert g == 0.0
    p = ctx_const.params.p
    for t in np.linspace(0.1, 2.0, 20):
        direct = energy_value(ctx_const, Field(ctx_const.grid, t * u.values))
        closed = t**2 * q / 2.0 - t ** (2 * p) * d / (2 * p)
        assert direct == pytest.approx(closed, rel=1e-11, abs=1e-11)


def test_energy_shift_invariance_periodic_problem(ctx_gamma, rng):
    u = random_smooth_field(ctx_gamma.grid, rng)
    e0 = energy_value(ctx_gamma, u)
    e1 = energy_value(ctx_gamma, shift(u, [3.0]))
    assert e1 == pytest.approx(e0, rel=1e-12)
    assert energy_per(ctx_gamma, shift(u, [3.0])) == pytest.approx(
        energy_per(ctx_gamma, u), rel=1e-12)


def test_energy_report_consistency(ctx_gamma, rng):
    u = random_smooth_field(ctx_gamma.grid, rng)
    rep = energy(ctx_gamma, u)
    p, qe = ctx_gamma.params.p, ctx_gamma.params.q
    assert rep.e_val == pytest.approx(
        rep.q_val / 2 - rep.d_val / (2 * p) + rep.gamma_term / qe, rel=1e-12)
    assert rep.nehari_residual == pytest.approx(
        rep.q_val - rep.d_val + rep.gamma_term, rel=1e-12)
    data = rep.to_json()
    assert '"e_val"' in data and '"grad_norm"' in data


def test_energy_per_equals_energy_without_vl(ctx_const, rng):
    u = random_smooth_field(ctx_const.grid, rng)
    assert energy_per(ctx_const, u) == energy_value(ctx_const, u)


def test_energy_per_with_localized_part(rng):
    from choquard_gs.problem import Descriptor, PotentialSpec

    pot = PotentialSpec(Descriptor("constant", {"value": 1.0}),
                        Descriptor("gaussian-bump", {"amplitude": -0.3, "width": 2.0}),
                        "negative", Descriptor("zero"))
    ctx = build_context(make_params(), pot)
    u = random_smooth_field(ctx.grid, rng)
    vl_term = float(ctx.grid.cell_volume * np.sum(ctx.Vl.values * u.values**2))
    assert energy_per(ctx, u) == pytest.approx(energy_value(ctx, u) - 0.5 * vl_term, rel=1e-12)


def test_grad_zero_field(ctx_gamma):
    g = grad_energy(ctx_gamma, zero_field(ctx_gamma))
    assert not np.any(g.values)


def test_grad_matches_finite_differences(ctx_gamma, rng):
    for _ in range(10):
        u = random_smooth_field(ctx_gamma.grid, rng)
        w = random_smooth_field(ctx_gamma.grid, rng)
        grad = grad_energy(ctx_gamma, u)
        analytic = l2_inner(grad, w)
        fd = directional_derivative_fd(ctx_gamma, u, w, eps=1e-5)
        assert fd == pytest.approx(analytic, rel=1e-6)


def test_grad_pairing_identity(ctx_gamma, rng):
    # E'(u)(u) recombines from the scalar triple
    u = random_smooth_field(ctx_gamma.grid, rng)
    q, d, g = qdg(ctx_gamma, u)
    pairing = l2_inner(grad_energy(ctx_gamma, u), u)
    assert pairing == pytest.approx(q - d + g, rel=1e-10, abs=1e-10)


def test_dual_grad_norm_positive(ctx_const, rng):
    u = random_smooth_field(ctx_const.grid, rng)
    g = grad_energy(ctx_const, u)
    assert dual_grad_norm(ctx_const, g) > 0


def test_d_bound_regression(ctx_const, rng):
    C = estimate_d_bound(ctx_const)
    assert C > 0
    assert estimate_d_bound(ctx_const) == C  # cached
    p = ctx_const.params.p
    for _ in range(20):
        u = random_smooth_field(ctx_const.grid, rng)
        q = q_boundary(ctx_const, u)
        assert d_value(ctx_const, u) / (2 * p) <= C * q**p


def test_brezis_lieb_trivial_cases(ctx_const):
    g = ctx_const.grid
    u0 = gaussian_field(g, [0.0], 1.0)
    zero = zero_field(ctx_const)
    shifts = [[2.0], [4.0]]
    rep = brezis_lieb_check(ctx_const, u0, zero, shifts)
    assert all(d <= 1e-12 for d in rep.deltas)
    rep = brezis_lieb_check(ctx_const, zero, u0, shifts)
    assert all(d <= 1e-12 for d in rep.deltas)


def test_brezis_lieb_separating_bumps(ctx_const):
    g = ctx_const.grid
    u0 = gaussian_field(g, [0.0], 1.0)
    w = gaussian_field(g, [0.0], 0.8, amplitude=0.7)
    rep = brezis_lieb_check(ctx_const, u0, w, [[2.0], [4.0], [6.0], [8.0]])
    assert rep.strictly_decreasing()
    assert rep.decreasing()


def test_gamma_integral_zero_without_gamma(ctx_const, rng):
    assert gamma_integral(ctx_const, random_smooth_field(ctx_const.grid, rng)) == 0.0


def test_fiber_scalar_helpers(ctx_gamma, rng):
    u = random_smooth_field(ctx_gamma.grid, rng)
    q, d, g = qdg(ctx_gamma, u)
    t = 1.7
    scaled = Field(ctx_gamma.grid, t * u.values)
    assert energy_from_qdg(ctx_gamma, q, d, g, t) == pytest.approx(
        energy_value(ctx_gamma, scaled), rel=1e-11)
    pairing = l2_inner(grad_energy(ctx_gamma, scaled), scaled)
    assert fiber_residual_from_qdg(ctx_gamma, q, d, g, t) == pytest.approx(
        pairing, rel=1e-9, abs=1e-9)


def test_context_variants(rng):
    from choquard_gs.problem import Descriptor, PotentialSpec

    pot = PotentialSpec(Descriptor("constant", {"value": 1.0}),
                        Descriptor("gaussian-bump", {"amplitude": -0.3, "width": 2.0}),
                        "negative", Descriptor("cosine", {"amplitude": 0.5}))
    ctx = build_context(make_params(), pot)
    per = ctx.periodic_variant()
    assert not per.has_vl
    u = random_smooth_field(ctx.grid, rng)
    assert energy_value(per, u) == pytest.approx(energy_per(ctx, u), rel=1e-12)
    half = ctx.with_gamma_scaled(0.5)
    assert gamma_integral(half, u) == pytest.approx(0.5 * gamma_integral(ctx, u), rel=1e-12)


def test_nonlocal_derivative_pairing_continuous(ctx_const, rng):
    # pairing of the nonlocal-term derivative converges as the base point
    # does (finite-dimensional shadow of its sequential continuity)
    p = ctx_const.params.p
    kern = ctx_const.kernel

    def d_prime_pairing(u, w):
        from choquard_gs.operators import phi_u

        phi = phi_u(kern, u, p)
        integrand = phi.values * np.abs(u.values) ** (p - 2.0) * u.values * w.values
        return 2.0 * p * ctx_const.grid.cell_volume * np.sum(integrand)

    u = random_smooth_field(ctx_const.grid, rng)
    w = random_smooth_field(ctx_const.grid, rng)
    v = random_smooth_field(ctx_const.grid, rng)
    base = d_prime_pairing(u, w)
    errs = []
    for eps in (1e-2, 1e-3, 1e-4):
        u_eps = Field(ctx_const.grid, u.values + eps * v.values)
        errs.append(abs(d_prime_pairing(u_eps, w) - base))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 1e-3 * max(abs(base), 1.0)
