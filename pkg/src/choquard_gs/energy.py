"""Energy functional, its periodic variant, gradient, and splitting diagnostics.

All functionals are evaluated in the boundary representation: the quadratic
part through the spectral square-root operator, the nonlocal part through the
box-periodized Riesz convolution.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .grid import Field, Grid, l2_inner, l2_norm, random_smooth_field, shift
from .operators import RieszKernel, SqrtOp, apply_sqrt, build_riesz, build_sqrt_op, phi_u
from .problem import PotentialSpec, ProblemParams, sample_potentials, validate


@dataclass(eq=False)
class EnergyContext:
    """Assembled, validated problem data shared by every functional evaluation."""

    params: ProblemParams
    grid: Grid
    sqrt_op: SqrtOp
    kernel: RieszKernel
    Vp: Field
    Vl: Field
    Gamma: Field

    def __post_init__(self):
        self.v_minus_m = self.Vp.values + self.Vl.values - self.params.m
        self.has_vl = bool(np.any(self.Vl.values))
        self.has_gamma = bool(np.any(self.Gamma.values))
        self.v_min = float(np.min(self.Vp.values + self.Vl.values))
        self._d_bound: float | None = None
        self._precond = 1.0 / (self.sqrt_op.multiplier + self.v_min)

    def periodic_variant(self) -> EnergyContext:
        """Same problem with the localized potential stripped."""
        zero = Field(self.grid, np.zeros(self.grid.shape))
        return EnergyContext(self.params, self.grid, self.sqrt_op, self.kernel,
                             self.Vp, zero, self.Gamma)

    def with_gamma_scaled(self, factor: float) -> EnergyContext:
        gam = Field(self.grid, factor * self.Gamma.values)
        return EnergyContext(self.params, self.grid, self.sqrt_op, self.kernel,
                             self.Vp, self.Vl, gam)


def build_context(params: ProblemParams, pot: PotentialSpec,
                  cell_quadrature_order: int = 16) -> EnergyContext:
    """Validate the problem and assemble operators, kernel and sampled potentials."""
    report = validate(params, pot)
    if not report.all_passed:
        failed = "; ".join(f"{c.name} ({c.witness})" for c in report.failures())
        raise ValueError(f"problem validation failed: {failed}")
    grid = params.make_grid()
    vp, vl, gam = sample_potentials(params, pot, grid)
    sqrt_op = build_sqrt_op(grid, params.m)
    kernel = build_riesz(grid, params.alpha, cell_quadrature_order, p=params.p)
    return EnergyContext(params, grid, sqrt_op, kernel, vp, vl, gam)


def q_boundary(ctx: EnergyContext, u: Field) -> float:
    """Quadratic form in the boundary representation; the squared problem norm."""
    au = apply_sqrt(ctx.sqrt_op, u)
    return l2_inner(au, u) + float(ctx.grid.cell_volume * np.sum(ctx.v_minus_m * u.values**2))


def d_value(ctx: EnergyContext, u: Field) -> float:
    """Nonlocal interaction: pairing of the Riesz convolution of |u|^p with |u|^p."""
    g = np.abs(u.values) ** ctx.params.p
    phi = phi_u(ctx.kernel, u, ctx.params.p)
    return float(ctx.grid.cell_volume * np.sum(phi.values * g))


def gamma_integral(ctx: EnergyContext, u: Field) -> float:
    if not ctx.has_gamma:
        return 0.0
    return float(ctx.grid.cell_volume * np.sum(ctx.Gamma.values * np.abs(u.values) ** ctx.params.q))


def qdg(ctx: EnergyContext, u: Field) -> tuple[float, float, float]:
    """The scalar triple (Q, D, G) from which every fiber quantity recombines."""
    return q_boundary(ctx, u), d_value(ctx, u), gamma_integral(ctx, u)


def energy_value(ctx: EnergyContext, u: Field) -> float:
    q, d, g = qdg(ctx, u)
    return energy_from_qdg(ctx, q, d, g)


def energy_from_qdg(ctx: EnergyContext, q: float, d: float, g: float, t: float = 1.0) -> float:
    """Energy of t*u given the scalar triple of u."""
    p, qe = ctx.params.p, ctx.params.q
    return t**2 * q / 2.0 - t ** (2.0 * p) * d / (2.0 * p) + t**qe * g / qe


def fiber_residual_from_qdg(ctx: EnergyContext, q: float, d: float, g: float,
                            t: float = 1.0) -> float:
    """Derivative pairing of the energy at t*u with t*u itself."""
    p, qe = ctx.params.p, ctx.params.q
    return t**2 * q - t ** (2.0 * p) * d + t**qe * g


def vl_integral(ctx: EnergyContext, u: Field) -> float:
    if not ctx.has_vl:
        return 0.0
    return float(ctx.grid.cell_volume * np.sum(ctx.Vl.values * u.values**2))


def energy_per(ctx: EnergyContext, u: Field) -> float:
    """Periodic energy: the full energy minus the localized-potential half term."""
    return energy_value(ctx, u) - 0.5 * vl_integral(ctx, u)


def grad_energy(ctx: EnergyContext, u: Field) -> Field:
    """L^2 gradient field of the energy at u."""
    p, qe = ctx.params.p, ctx.params.q
    au = apply_sqrt(ctx.sqrt_op, u)
    phi = phi_u(ctx.kernel, u, p)
    vals = u.values
    out = au.values + ctx.v_minus_m * vals - phi.values * np.abs(vals) ** (p - 2.0) * vals
    if ctx.has_gamma:
        out = out + ctx.Gamma.values * np.abs(vals) ** (qe - 2.0) * vals
    return Field(ctx.grid, out)


def precondition(ctx: EnergyContext, g: Field) -> Field:
    """Spectral division by the symbol plus the potential floor; tames stiffness."""
    return Field(ctx.grid, np.fft.ifftn(ctx._precond * np.fft.fftn(g.values)).real)


def dual_grad_norm(ctx: EnergyContext, g: Field) -> float:
    """Dual-style residual norm: inner product of gradient with its preconditioning."""
    return float(np.sqrt(max(l2_inner(g, precondition(ctx, g)), 0.0)))


@dataclass
class EnergyReport:
    """Every functional piece at one field, flattened for serialization."""

    q_val: float
    d_val: float
    gamma_term: float
    e_val: float
    e_per_val: float
    nehari_residual: float
    grad_norm: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def energy(ctx: EnergyContext, u: Field) -> EnergyReport:
    q, d, g = qdg(ctx, u)
    e = energy_from_qdg(ctx, q, d, g)
    grad = grad_energy(ctx, u)
    return EnergyReport(
        q_val=q,
        d_val=d,
        gamma_term=g,
        e_val=e,
        e_per_val=e - 0.5 * vl_integral(ctx, u),
        nehari_residual=fiber_residual_from_qdg(ctx, q, d, g),
        grad_norm=l2_norm(grad),
    )


def estimate_d_bound(ctx: EnergyContext, n_samples: int = 64, seed: int = 0,
                     safety: float = 2.0) -> float:
    """Empirical constant C with D(u)/(2p) <= C * Q(u)^p over random smooth fields.

    Estimated once per context by randomized maximization and cached; later
    checks treat it as a regression bound.
    """
    if ctx._d_bound is not None:
        return ctx._d_bound
    rng = np.random.default_rng(seed)
    p = ctx.params.p
    best = 0.0
    for _ in range(n_samples):
        u = random_smooth_field(ctx.grid, rng)
        q = q_boundary(ctx, u)
        if q <= 0:
            continue
        ratio = d_value(ctx, u) / (2.0 * p * q**p)
        best = max(best, ratio)
    ctx._d_bound = safety * best
    return ctx._d_bound


@dataclass
class BrezisLiebReport:
    shifts: list
    deltas: list[float]
    floor: float

    def decreasing(self, jitter: float = 0.1) -> bool:
        d = self.deltas
        return all(d[i + 1] <= d[i] * (1.0 + jitter) for i in range(len(d) - 1))

    def strictly_decreasing(self) -> bool:
        d = self.deltas
        return all(d[i + 1] < d[i] for i in range(len(d) - 1))


def brezis_lieb_check(ctx: EnergyContext, u0: Field, w: Field, shifts) -> BrezisLiebReport:
    """Splitting defect of the nonlocal term under separating translations.

    For u_n = u0 + w(. - z_n) reports |D(u_n) - D(u_n - u0) - D(u0)|, which
    must sink toward the periodization floor as the bumps separate.
    """
    d_u0 = d_value(ctx, u0)
    deltas = []
    for z in shifts:
        wz = shift(w, z)
        un = Field(ctx.grid, u0.values + wz.values)
        delta = d_value(ctx, un) - d_value(ctx, wz) - d_u0
        deltas.append(abs(delta))
    floor = 1e-12 * max(1.0, abs(d_u0))
    return BrezisLiebReport([np.asarray(z) for z in shifts], deltas, floor)


def directional_derivative_fd(ctx: EnergyContext, u: Field, w: Field,
                              eps: float = 1e-5) -> float:
    """Central finite difference of the energy along w; gradient oracle."""
    up = Field(ctx.grid, u.values + eps * w.values)
    um = Field(ctx.grid, u.values - eps * w.values)
    return (energy_value(ctx, up) - energy_value(ctx, um)) / (2.0 * eps)
