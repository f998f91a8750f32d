"""Truncated reaction map and its fixed points inside the barrier sandwich.

Between the ordered barriers the reaction is left alone; below the lower
barrier it is frozen at the lower barrier's value and above the upper
barrier at the upper barrier's value.  The resulting load is bounded by
a multiple of d^-beta, so one application of the solution operator is
well defined; fixed points of that map that land inside the sandwich
solve the untruncated problem.

The fixed-point drive is damped successive substitution started from the
lower barrier, with a damped Newton polish on the truncated residual when
substitution stalls.  Convergence is decided on the weighted residual of
the truncated system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, Mesh
from .nonlin import Nonlinearity, eval_f, f_prime
from .plap import _apply_values, _flux_derivative, as_p, weak_residual
from .dirichlet_solver import SingularRHS, SolveOptions, SolverFailure, default_solve_options, solve_S
from .barriers import UpperPack


@dataclass(frozen=True, eq=False)
class TruncationContext:
    """Frozen barrier pair and reaction term for one truncation ceiling."""

    u_lower: GridFunction
    u_upper: GridFunction
    f: Nonlinearity
    lam_max: float
    lambda_star: float
    beta: float

    def __post_init__(self):
        fr = self.u_lower.mesh.free
        lo = self.u_lower.values[fr]
        hi = self.u_upper.values[fr]
        if np.any(lo <= 0.0):
            raise ValueError("lower barrier must be positive at free nodes")
        if np.any(lo > hi * (1.0 + 1e-9)):
            raise ValueError("barriers are not ordered (lower exceeds upper)")
        if not (0.0 < self.lambda_star <= self.lam_max * (1.0 + 1e-12)):
            raise ValueError("need 0 < lambda_star <= lam_max")


def context_for(
    lam: float,
    pack,
    upper: UpperPack,
    f: Nonlinearity,
    beta: float,
) -> TruncationContext:
    """Convenience: build the context with the lower barrier scaled to lam."""
    from .barriers import lower_solution

    return TruncationContext(
        u_lower=lower_solution(lam, pack),
        u_upper=upper.u_upper,
        f=f,
        lam_max=upper.lam_max,
        lambda_star=pack.lambda_star,
        beta=beta,
    )


def truncate_f(u: GridFunction, ctx: TruncationContext) -> GridFunction:
    """Reaction values with the argument clamped into the sandwich.

    Below the lower barrier the value is f(lower), above the upper barrier
    f(upper); in between f(u).  Boundary nodes carry zero.
    """
    mesh = u.mesh
    fr = mesh.free
    clamped = np.clip(u.values[fr], ctx.u_lower.values[fr], ctx.u_upper.values[fr])
    out = np.zeros(mesh.n_nodes)
    out[fr] = np.asarray(eval_f(ctx.f, clamped))
    return GridFunction(mesh, out, dirichlet=True)


def bound_truncation(ctx: TruncationContext, d: GridFunction, beta: float, n_scan: int = 33) -> float:
    """Smallest constant with |f_trunc| <= C / d^beta over the sandwich.

    Scans log-spaced arguments between the barriers at every free node,
    so the bound covers all three truncation branches at once.
    """
    mesh = ctx.u_lower.mesh
    fr = mesh.free
    lo = ctx.u_lower.values[fr]
    hi = np.maximum(ctx.u_upper.values[fr], lo * (1.0 + 1e-15))
    t = np.linspace(0.0, 1.0, n_scan)[:, None]
    args = lo[None, :] * (hi / lo)[None, :] ** t  # geometric sweep per node
    vals = np.abs(np.asarray(eval_f(ctx.f, args)))
    worst = np.max(vals, axis=0)
    return float(np.max(worst * d.values[fr] ** beta))


def _truncated_load(u_vals: np.ndarray, ctx: TruncationContext, lam: float, h: GridFunction) -> np.ndarray:
    mesh = ctx.u_lower.mesh
    fr = mesh.free
    clamped = np.clip(u_vals[fr], ctx.u_lower.values[fr], ctx.u_upper.values[fr])
    out = np.zeros(mesh.n_nodes)
    out[fr] = lam * np.asarray(eval_f(ctx.f, clamped)) + h.values[fr]
    return out


def T_map(
    lam: float,
    u: GridFunction,
    ctx: TruncationContext,
    h: GridFunction,
    p: "float",
    opts: SolveOptions | None = None,
) -> GridFunction:
    """One application of u -> S(lam f_trunc(u) + h).

    Defined for lam in [lambda_star, lam_max]; the truncated load is an
    admissible singular right-hand side by construction.
    """
    pv = as_p(p)
    if not (ctx.lambda_star * (1.0 - 1e-12) <= lam <= ctx.lam_max * (1.0 + 1e-12)):
        raise ValueError(
            f"lambda {lam!r} outside the truncation range "
            f"[{ctx.lambda_star:.6e}, {ctx.lam_max:.6e}]"
        )
    mesh = u.mesh
    if opts is None:
        opts = default_solve_options(pv, tight=True)
    load = _truncated_load(u.values, ctx, lam, h)
    rhs = SingularRHS.from_values(mesh, load, ctx.beta)
    return solve_S(rhs, pv, mesh, opts, initial=u)


@dataclass(frozen=True)
class FixedPointOptions:
    """Iteration controls for the truncated fixed-point drive."""

    tol: float = 1e-7
    max_picard: int = 90
    max_newton: int = 50
    damping: float = 0.5
    slack_factor: float = 100.0
    solve: SolveOptions | None = None


@dataclass(eq=False)
class FixedPointResult:
    """Outcome of one fixed-point drive at a single lambda."""

    converged: bool
    u_star: GridFunction
    iterations: int
    residual: float
    in_sandwich: bool
    history: list = field(default_factory=list)


def _truncated_residual(u_vals, ctx, lam, h, mesh, pv):
    load = _truncated_load(u_vals, ctx, lam, h)
    fr = mesh.free
    r = (_apply_values(u_vals, mesh, pv) - load)[fr] * mesh.weights[fr]
    return float(np.max(np.abs(r)))


def _newton_polish(u_vals, ctx, lam, h, mesh, pv, tol, max_iter):
    """Damped Newton on the truncated residual; returns (values, iterations)."""
    from scipy.linalg import solve_banded

    fr = mesh.free
    w = mesh.weights[fr]
    lo = ctx.u_lower.values[fr]
    hi = ctx.u_upper.values[fr]
    hvals = h.values[fr]
    n = fr.size
    first = fr[0]

    def residual_vec(vals):
        clamped = np.clip(vals[fr], lo, hi)
        load = lam * np.asarray(eval_f(ctx.f, clamped)) + hvals
        return (_apply_values(vals, mesh, pv)[fr] - load) * w

    u = u_vals.copy()
    res = residual_vec(u)
    merit = float(np.max(np.abs(res)))
    for it in range(max_iter):
        if merit <= tol:
            return u, it
        du = np.diff(u) / mesh.spacing
        a = mesh.edge_sigma * np.maximum(_flux_derivative(du, pv), 1e-300) / mesh.spacing
        vol = mesh.cell_volume[fr]
        right = a[first : first + n]
        if first == 0:
            left = np.concatenate(([0.0], a[0 : n - 1]))
        else:
            left = a[first - 1 : first - 1 + n]
        inside = (u[fr] >= lo) & (u[fr] <= hi)
        dfdu = np.where(inside, np.asarray(f_prime(ctx.f, np.clip(u[fr], lo, hi))), 0.0)
        diag = ((left + right) / vol - lam * dfdu) * w
        sub = np.zeros(n)
        sup = np.zeros(n)
        sub[1:] = -a[first : first + n - 1] / vol[1:] * w[1:]
        sup[:-1] = -a[first : first + n - 1] / vol[:-1] * w[:-1]
        ab = np.zeros((3, n))
        ab[0, 1:] = sup[:-1]
        ab[1, :] = diag
        ab[2, :-1] = sub[1:]
        try:
            step_free = solve_banded((1, 1), ab, -res)
        except np.linalg.LinAlgError:
            return u, it
        step = np.zeros(mesh.n_nodes)
        step[fr] = step_free
        t = 1.0
        for _ in range(40):
            cand = u + t * step
            cand_res = residual_vec(cand)
            cand_merit = float(np.max(np.abs(cand_res)))
            if cand_merit < (1.0 - 1e-4 * t) * merit:
                u, res, merit = cand, cand_res, cand_merit
                break
            t *= 0.5
        else:
            return u, it
    return u, max_iter


def solve_fixed_point(
    lam: float,
    ctx: TruncationContext,
    h: GridFunction,
    p: "float",
    opts: FixedPointOptions | None = None,
    u0: GridFunction | None = None,
) -> FixedPointResult:
    """Drive u -> T(lam, u) to a fixed point, starting from the lower barrier.

    Damped substitution runs first; if its residual stalls, a damped
    Newton iteration on the truncated system takes over.  The result is
    flagged ``in_sandwich`` when it sits between the barriers up to
    ``slack_factor`` times the tolerance; such points satisfy the
    untruncated equation to the same residual figure.
    """
    pv = as_p(p)
    if opts is None:
        opts = FixedPointOptions()
    solve_opts = opts.solve if opts.solve is not None else default_solve_options(pv, tight=True)
    mesh = ctx.u_lower.mesh
    fr = mesh.free
    u = (u0 if u0 is not None else ctx.u_lower).values.copy()
    # residual tolerances are relative above unit load scale, matching the
    # inner solver's floor on large-lambda branches
    load_scale = float(np.max(np.abs(_truncated_load(u, ctx, lam, h)[fr]), initial=0.0))
    tol = opts.tol * max(1.0, load_scale)
    target = 0.3 * tol
    history: list[float] = []
    iterations = 0
    best = u.copy()
    best_res = _truncated_residual(u, ctx, lam, h, mesh, pv)

    theta = opts.damping
    warm = GridFunction(mesh, u, dirichlet=True)
    for k in range(opts.max_picard):
        load = _truncated_load(u, ctx, lam, h)
        try:
            rhs = SingularRHS.from_values(mesh, load, ctx.beta)
            v = solve_S(rhs, pv, mesh, solve_opts, initial=warm).values
        except SolverFailure:
            break
        iterations += 1
        inc = float(np.max(np.abs(v - u)))
        u = u + theta * (v - u)
        u[mesh.is_dirichlet] = 0.0
        warm = GridFunction(mesh, u, dirichlet=True)
        res = _truncated_residual(u, ctx, lam, h, mesh, pv)
        history.append(res)
        if res < best_res:
            best, best_res = u.copy(), res
        if res <= target:
            break
        if k >= 11 and history[-1] > 0.7 * history[-6]:
            break  # stalled; hand over to Newton
    res = _truncated_residual(u, ctx, lam, h, mesh, pv)
    if res > target:
        u, newton_iters = _newton_polish(best, ctx, lam, h, mesh, pv, target, opts.max_newton)
        iterations += newton_iters
        res = _truncated_residual(u, ctx, lam, h, mesh, pv)
        history.append(res)

    u_star = GridFunction(mesh, u, dirichlet=True)
    slack = opts.slack_factor * opts.tol
    in_sandwich = bool(
        np.all(u[fr] >= ctx.u_lower.values[fr] - slack)
        and np.all(u[fr] <= ctx.u_upper.values[fr] + slack)
    )
    converged = res <= tol
    return FixedPointResult(
        converged=converged,
        u_star=u_star,
        iterations=iterations,
        residual=res,
        in_sandwich=in_sandwich and converged,
        history=history,
    )
