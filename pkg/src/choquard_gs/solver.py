"""Projected gradient descent over the Nehari manifold with lattice recentering."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .energy import (
    EnergyContext,
    dual_grad_norm,
    energy_from_qdg,
    energy_value,
    grad_energy,
    precondition,
    q_boundary,
    qdg,
)
from .grid import Field, gaussian_field, l2_inner, l2_norm, min_image, shift
from .nehari import NehariProjectionError, nehari_t_from_qdg


class SolveFailure(RuntimeError):
    """No run of a multistart batch converged."""


@dataclass
class SolverConfig:
    max_iters: int = 2000
    grad_tol: float = 1e-8          # on the gradient norm, relative to the initial one
    grad_tol_abs: float = 0.0       # optional absolute floor; 0 disables
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 60
    step_init: float = 1.0
    step_max: float = 4.0
    recenter_every: int = 25
    preconditioned: bool = True
    dual_residual: bool = False
    seed: int = 0
    trace_path: str | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")


@dataclass(eq=False)
class SolverResult:
    """Converged state plus the full iterate history needed for diagnostics.

    status 'max_iters' also covers a line-search stall below the requested
    tolerance; 'converged' guarantees the last residual met it.
    """

    u_final: Field
    energy_trace: np.ndarray
    residual_trace: np.ndarray
    qnorm_trace: np.ndarray
    com_trace: np.ndarray
    shifts_applied: list[np.ndarray]
    shift_iters: list[int]
    status: str
    iterations: int
    threshold: float


def _center_of_mass(u: Field) -> np.ndarray:
    """Bump center on the torus: mass-weighted minimal-image offset from the peak."""
    g = u.grid
    w = u.values**2
    total = float(np.sum(w))
    if total == 0.0:
        return np.zeros(g.N)
    peak = np.unravel_index(int(np.argmax(np.abs(u.values))), g.shape)
    xs = g.axis_coords()
    com = np.zeros(g.N)
    for axis in range(g.N):
        d = min_image(g, xs - xs[peak[axis]])
        marg = np.sum(w, axis=tuple(a for a in range(g.N) if a != axis))
        com[axis] = xs[peak[axis]] + float(np.sum(d * marg) / total)
    return min_image(g, com)


def _recenter_shift(u: Field) -> np.ndarray:
    """Integer lattice vector moving the peak of |u| into the origin cell."""
    g = u.grid
    peak = np.unravel_index(int(np.argmax(np.abs(u.values))), g.shape)
    xs = g.axis_coords()
    return np.array([round(xs[i]) for i in peak], dtype=float)


def solve(ctx: EnergyContext, init: Field, cfg: SolverConfig | None = None) -> SolverResult:
    """Minimize the energy over the manifold from one initial field.

    Step: gradient (optionally symbol-preconditioned), backtracking measured
    on the energy after re-projection, periodic recentering by exact lattice
    shifts (unconditional when the problem is translation invariant, energy
    guarded otherwise).
    """
    cfg = cfg or SolverConfig()
    trace_fh = open(cfg.trace_path, "w", encoding="utf-8") if cfg.trace_path else None
    energies: list[float] = []
    residuals: list[float] = []
    qnorms: list[float] = []
    coms: list[np.ndarray] = []
    shifts_applied: list[np.ndarray] = []
    shift_iters: list[int] = []

    def result(u, status, iterations, threshold):
        if trace_fh:
            trace_fh.close()
        return SolverResult(u, np.asarray(energies), np.asarray(residuals),
                            np.asarray(qnorms), np.asarray(coms) if coms else np.zeros((0, ctx.grid.N)),
                            shifts_applied, shift_iters, status, iterations, threshold)

    try:
        t_star, u = project_step(ctx, init)
    except NehariProjectionError:
        return result(init, "projection_failed", 0, 0.0)
    q, d, g = qdg(ctx, u)
    e = energy_from_qdg(ctx, q, d, g)

    res_norm = (lambda gr: dual_grad_norm(ctx, gr)) if cfg.dual_residual else l2_norm
    tau = cfg.step_init
    # once energy decrements fall below round-off the line search is blind;
    # keep the step at a stability-scale floor so progress continues
    if cfg.preconditioned:
        tau_floor = 0.25 * cfg.step_init
    else:
        lin_scale = float(np.max(ctx.sqrt_op.multiplier) + max(np.max(ctx.v_minus_m), 0.0))
        tau_floor = 0.5 / max(lin_scale, 1e-10)
    threshold = 0.0
    status = "max_iters"
    it = 0
    last_shift: list[int] | None = None
    for it in range(cfg.max_iters + 1):
        grad = grad_energy(ctx, u)
        res = res_norm(grad)
        if it == 0:
            threshold = max(cfg.grad_tol * res, cfg.grad_tol_abs)
        energies.append(e)
        residuals.append(res)
        qnorms.append(np.sqrt(max(q, 0.0)))
        coms.append(_center_of_mass(u))
        if trace_fh:
            trace_fh.write(json.dumps({"iter": it, "energy": e, "residual": res,
                                       "t_star": t_star, "shift": last_shift}) + "\n")
        last_shift = None
        if res <= threshold:
            status = "converged"
            break
        if it == cfg.max_iters:
            break

        direction = precondition(ctx, grad) if cfg.preconditioned else grad
        slope = l2_inner(grad, direction)
        accepted = False
        genuine = False
        for bt in range(cfg.max_backtracks):
            cand = Field(ctx.grid, u.values - tau * direction.values)
            try:
                qc, dc, gc = qdg(ctx, cand)
                t_star = nehari_t_from_qdg(qc, dc, gc, ctx.params.p, ctx.params.q)
            except NehariProjectionError:
                tau *= cfg.shrink
                continue
            e_new = energy_from_qdg(ctx, qc, dc, gc, t_star)
            genuine = e_new <= e - cfg.sufficient_decrease * tau * slope
            if genuine or e_new <= e + 1e-14 * (1.0 + abs(e)):
                accepted = True
                break
            tau *= cfg.shrink
        if not accepted:
            break  # stalled below representable decrease; reported as max_iters
        u = Field(ctx.grid, t_star * cand.values)
        q, e = t_star**2 * qc, e_new
        if genuine and bt == 0:
            tau = min(tau * 1.25, cfg.step_max)
        elif not genuine:
            # decrease below round-off: damp toward the stable step so the
            # iterate neither random-walks nor starves
            tau = max(tau * cfg.shrink, tau_floor)

        if cfg.recenter_every > 0 and (it + 1) % cfg.recenter_every == 0:
            z = _recenter_shift(u)
            if np.any(z):
                moved = shift(u, -z)
                if not ctx.has_vl:
                    u = moved
                    applied = True
                else:
                    e_moved = energy_value(ctx, moved)
                    applied = e_moved <= e
                    if applied:
                        u, e = moved, e_moved
                        q = q_boundary(ctx, u)
                if applied:
                    shifts_applied.append(z.astype(int))
                    shift_iters.append(it + 1)
                    last_shift = [int(c) for c in z]
    return result(u, status, it, threshold)


def project_step(ctx: EnergyContext, u: Field) -> tuple[float, Field]:
    q, d, g = qdg(ctx, u)
    t = nehari_t_from_qdg(q, d, g, ctx.params.p, ctx.params.q)
    return t, Field(ctx.grid, t * u.values)


def random_initial(ctx: EnergyContext, rng: np.random.Generator,
                   noise: float = 1e-3) -> Field:
    """Randomized smooth bump: Gaussian with random width/center plus small noise."""
    g = ctx.grid
    center = rng.uniform(-g.L / 2.0, g.L / 2.0, size=g.N)
    width = rng.uniform(0.8, max(1.6, g.L / 6.0))
    u = gaussian_field(g, center, width)
    if noise > 0:
        bump = gaussian_field(g, rng.uniform(-g.L, g.L, size=g.N), width).values
        u = Field(g, u.values + noise * bump)
    return u


def multistart(ctx: EnergyContext, k: int, cfg: SolverConfig | None = None,
               workers: int = 1) -> tuple[SolverResult, list[SolverResult]]:
    """k independent seeded runs; best converged final energy wins."""
    if k < 1:
        raise ValueError("need at least one start")
    cfg = cfg or SolverConfig()
    inits = [random_initial(ctx, np.random.default_rng([cfg.seed, i])) for i in range(k)]

    def run(i):
        return solve(ctx, inits[i], cfg)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(k)))
    else:
        results = [run(i) for i in range(k)]
    converged = [r for r in results if r.status == "converged"]
    if not converged:
        raise SolveFailure(f"none of {k} starts converged")
    best = min(converged, key=lambda r: r.energy_trace[-1])
    return best, results


@dataclass
class EscapeReport:
    """Translation diagnostics over an iterate history."""

    radius_trace: np.ndarray
    drift_per_iter: np.ndarray
    longest_outward_run: int
    near_origin_mass: float
    escaping: bool


def escape_diagnostic(result: SolverResult, run_threshold: int = 50) -> EscapeReport:
    """Flag mass escaping by translation: sustained monotone outward drift of
    the bump center, plus the final mass fraction near the recentered origin."""
    coms = result.com_trace
    if coms.size == 0:
        return EscapeReport(np.zeros(0), np.zeros(0), 0, 1.0, False)
    radius = np.sqrt(np.sum(coms**2, axis=1))
    drift = np.diff(radius)
    longest = 0
    current = 0
    for step in drift:
        current = current + 1 if step > 0 else 0
        longest = max(longest, current)
    g = result.u_final.grid
    r2 = np.zeros(g.shape)
    for c in g.coords():
        d = min_image(g, c)
        r2 = r2 + d * d
    w = result.u_final.values ** 2
    total = float(np.sum(w))
    near = float(np.sum(w[r2 <= (g.L / 4.0) ** 2]) / total) if total > 0 else 1.0
    return EscapeReport(radius, drift, longest, near, longest > run_threshold)
