"""Branch tracing over the load parameter and solvability-threshold search.

``trace_branch`` walks an increasing lambda grid, solving the truncated
fixed-point problem at each point (optionally warm-started from the last
solution) and recording a per-point summary.  ``check_connectedness``
applies the bounded-gap proxy: consecutive solutions may not jump more
than a calibrated rate times the lambda step.  ``find_threshold``
brackets the smallest solvable lambda by bisection on solvability flags;
below the barrier onset it falls back to an untruncated damped Newton
solve with a positivity floor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .fixedpoint import FixedPointOptions, FixedPointResult, context_for, solve_fixed_point
from .grid import GridFunction, distance_field
from .nonlin import eval_f, f_prime
from .plap import _apply_values, _flux_derivative, as_p
from .problem import PreparedProblem, ProblemSpec, prepare_problem
from .dirichlet_solver import default_solve_options


@dataclass(frozen=True, eq=False)
class BranchPoint:
    """Converged (or attempted) solution summary at one lambda."""

    lam: float
    u: GridFunction
    sup_norm: float
    min_u_over_d: float
    iterations: int
    residual: float
    converged: bool
    in_sandwich: bool


@dataclass(eq=False)
class Branch:
    """Ordered solution family over an increasing lambda grid."""

    points: list = field(default_factory=list)
    lambda_star: float = 0.0
    lam_max: float = 0.0
    failures: list = field(default_factory=list)


def _summarize(lam, result: FixedPointResult, d: GridFunction) -> BranchPoint:
    u = result.u_star
    fr = u.mesh.free
    return BranchPoint(
        lam=float(lam),
        u=u,
        sup_norm=u.sup_norm,
        min_u_over_d=float(np.min(u.values[fr] / d.values[fr])),
        iterations=result.iterations,
        residual=result.residual,
        converged=result.converged,
        in_sandwich=result.in_sandwich,
    )


def trace_branch(
    spec: ProblemSpec,
    lambda_grid,
    warm_start: bool = True,
    prepared: PreparedProblem | None = None,
    fp_opts: FixedPointOptions | None = None,
) -> Branch:
    """Solve along an increasing lambda grid inside [lambda_star, max grid].

    Cold starts launch every point from its own scaled lower barrier;
    warm starts reuse the previous solution.  Failures are recorded and
    the partial branch is returned with them attached.
    """
    grid = np.asarray(list(lambda_grid), dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid must be nonempty")
    if np.any(np.diff(grid) <= 0.0):
        raise ValueError("lambda grid must be strictly increasing")
    if prepared is None:
        prepared = prepare_problem(spec)
    pack = prepared.pack
    if grid[0] < pack.lambda_star * (1.0 - 1e-12):
        raise ValueError(
            f"lambda grid starts below lambda_star = {pack.lambda_star:.6e}"
        )
    upper = prepared.upper_for(float(grid[-1]))
    branch = Branch(lambda_star=pack.lambda_star, lam_max=float(grid[-1]))
    prev: GridFunction | None = None
    for lam in grid:
        u0 = prev if (warm_start and prev is not None) else None
        point = solve_branch_point(prepared, upper, float(lam), fp_opts, u0=u0)
        branch.points.append(point)
        if point.converged:
            prev = point.u
        else:
            branch.failures.append({"lambda": float(lam), "residual": point.residual,
                                    "iterations": point.iterations})
    return branch


def solve_branch_point(
    prepared: PreparedProblem,
    upper,
    lam: float,
    fp_opts: FixedPointOptions | None = None,
    u0: GridFunction | None = None,
) -> BranchPoint:
    """One grid point of a branch; also the worker for cold-start fan-out."""
    spec = prepared.spec
    ctx = context_for(lam, prepared.pack, upper, spec.f, prepared.report.beta)
    result = solve_fixed_point(lam, ctx, spec.h, spec.p, fp_opts, u0=u0)
    return _summarize(lam, result, distance_field(spec.mesh))


def _cold_point(args) -> BranchPoint:
    prepared, upper, lam, fp_opts = args
    return solve_branch_point(prepared, upper, lam, fp_opts)


def trace_branch_parallel(
    spec: ProblemSpec,
    lambda_grid,
    jobs: int,
    prepared: PreparedProblem | None = None,
    fp_opts: FixedPointOptions | None = None,
) -> Branch:
    """Cold-start branch: every point independent, fanned out over processes."""
    from concurrent.futures import ProcessPoolExecutor

    grid = np.asarray(list(lambda_grid), dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid must be nonempty")
    if np.any(np.diff(grid) <= 0.0):
        raise ValueError("lambda grid must be strictly increasing")
    if prepared is None:
        prepared = prepare_problem(spec)
    pack = prepared.pack
    if grid[0] < pack.lambda_star * (1.0 - 1e-12):
        raise ValueError(f"lambda grid starts below lambda_star = {pack.lambda_star:.6e}")
    upper = prepared.upper_for(float(grid[-1]))
    branch = Branch(lambda_star=pack.lambda_star, lam_max=float(grid[-1]))
    payloads = [(prepared, upper, float(lam), fp_opts) for lam in grid]
    with ProcessPoolExecutor(max_workers=max(1, jobs)) as pool:
        points = list(pool.map(_cold_point, payloads))
    for point in points:
        branch.points.append(point)
        if not point.converged:
            branch.failures.append({"lambda": point.lam, "residual": point.residual,
                                    "iterations": point.iterations})
    return branch


@dataclass(frozen=True)
class ConnectednessReport:
    """Largest jump of the branch measured against its step allowance."""

    passed: bool
    largest_gap: float
    worst_pair: tuple[float, float] | None


def check_connectedness(branch: Branch, gap_tol: float) -> ConnectednessReport:
    """Bounded-gap proxy on consecutive converged branch points.

    Each adjacent pair must satisfy ||u_b - u_a||_inf <= gap_tol *
    (lambda_b - lambda_a + 1); ``largest_gap`` is the largest observed
    jump/(step + 1), so the branch passes exactly when largest_gap <=
    gap_tol.  The frozen default tolerance is calibrated on the reference
    branch; callers checking a branch of a different magnitude should
    scale it by the ratio of branch sup norms (the jump measure is
    absolute, not relative).
    """
    worst = 0.0
    worst_pair = None
    pts = [pt for pt in branch.points if pt.converged]
    for a, b in zip(pts[:-1], pts[1:]):
        jump = float(np.max(np.abs(b.u.values - a.u.values)))
        gap = jump / (b.lam - a.lam + 1.0)
        if gap > worst:
            worst = gap
            worst_pair = (a.lam, b.lam)
    return ConnectednessReport(passed=worst <= gap_tol, largest_gap=worst, worst_pair=worst_pair)


@dataclass(eq=False)
class ExploratoryResult:
    """Untruncated Newton outcome used below the barrier onset."""

    converged: bool
    u: GridFunction
    residual: float
    floor_active: bool
    iterations: int


def exploratory_solve(
    spec: ProblemSpec,
    lam: float,
    u0: GridFunction | None = None,
    tol: float = 1e-8,
    max_iter: int = 120,
    u_floor: float = 1e-10,
) -> ExploratoryResult:
    """Damped Newton with a positivity floor on -Delta_p u = lam f(u) + h.

    The iterate is clipped at ``u_floor`` after every step; a run whose
    floor is still active at convergence is not accepted as a positive
    solution.  This path carries no existence guarantee and is the tool
    for probing lambdas below the barrier onset.
    """
    pv = as_p(spec.p)
    mesh = spec.mesh
    fr = mesh.free
    w = mesh.weights[fr]
    hvals = spec.h.values[fr]

    if u0 is None:
        # start from the linear solve of a flat positive load of comparable size
        probes = np.array([0.5, 1.0, 2.0, 5.0, 10.0])
        c0 = max(float(np.max(np.asarray(eval_f(spec.f, probes)))), 0.5)
        from .dirichlet_solver import SingularRHS, solve_S

        rhs0 = SingularRHS.from_values(mesh, lam * c0 * np.ones(mesh.n_nodes) + spec.h.values, 0.5)
        u = solve_S(rhs0, pv, mesh, default_solve_options(pv)).values.copy()
    else:
        u = u0.values.copy()
    u[fr] = np.maximum(u[fr], u_floor)
    u[mesh.is_dirichlet] = 0.0

    from scipy.linalg import solve_banded

    def residual_vec(vals):
        load = lam * np.asarray(eval_f(spec.f, np.maximum(vals[fr], u_floor))) + hvals
        return (_apply_values(vals, mesh, pv)[fr] - load) * w

    res = residual_vec(u)
    merit = float(np.max(np.abs(res)))
    n = fr.size
    first = fr[0]
    it = 0
    for it in range(1, max_iter + 1):
        if merit <= tol:
            break
        du = np.diff(u) / mesh.spacing
        a = mesh.edge_sigma * np.maximum(_flux_derivative(du, pv), 1e-300) / mesh.spacing
        vol = mesh.cell_volume[fr]
        right = a[first : first + n]
        if first == 0:
            left = np.concatenate(([0.0], a[0 : n - 1]))
        else:
            left = a[first - 1 : first - 1 + n]
        dfdu = np.asarray(f_prime(spec.f, np.maximum(u[fr], u_floor)))
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
            break
        if not np.all(np.isfinite(step_free)):
            break
        step = np.zeros(mesh.n_nodes)
        step[fr] = step_free
        t = 1.0
        moved = False
        for _ in range(45):
            cand = u + t * step
            cand[fr] = np.maximum(cand[fr], u_floor)
            cand_res = residual_vec(cand)
            cand_merit = float(np.max(np.abs(cand_res)))
            if cand_merit < (1.0 - 1e-4 * t) * merit:
                u, res, merit = cand, cand_res, cand_merit
                moved = True
                break
            t *= 0.5
        if not moved:
            break
    floor_active = bool(np.any(u[fr] <= u_floor * (1.0 + 1e-12)))
    return ExploratoryResult(
        converged=bool(merit <= tol and not floor_active),
        u=GridFunction(mesh, u, dirichlet=True),
        residual=merit,
        floor_active=floor_active,
        iterations=it,
    )


class ThresholdPreconditionError(RuntimeError):
    """The bracket endpoints do not exhibit the solvable/unsolvable split."""

    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class ThresholdEstimate:
    """Bracket [lambda0_lo, lambda0_hi] around the smallest solvable lambda."""

    lambda0_lo: float
    lambda0_hi: float
    width: float

    def __post_init__(self):
        if not (self.lambda0_lo < self.lambda0_hi):
            raise ValueError("threshold bracket must satisfy lo < hi")


def _attempt(
    prepared: PreparedProblem,
    lam: float,
    warm: GridFunction | None,
    fp_opts: FixedPointOptions | None,
    tol: float,
):
    """Solvability probe at one lambda; returns (converged, solution or None)."""
    spec = prepared.spec
    pack = prepared.pack
    if lam >= pack.lambda_star:
        upper = prepared.upper_for(max(lam, pack.lambda_star * (1.0 + 1e-9)))
        ctx = context_for(lam, pack, upper, spec.f, prepared.report.beta)
        result = solve_fixed_point(lam, ctx, spec.h, spec.p, fp_opts, u0=warm)
        if not result.converged:  # one retry from the cold start
            result = solve_fixed_point(lam, ctx, spec.h, spec.p, fp_opts, u0=None)
        return result.converged, (result.u_star if result.converged else None)
    result = exploratory_solve(spec, lam, u0=warm, tol=tol)
    if not result.converged:
        # one retry from a heavier flat-load start
        from .dirichlet_solver import SingularRHS, solve_S

        mesh = spec.mesh
        probes = np.array([0.5, 1.0, 2.0, 5.0, 10.0])
        c0 = max(float(np.max(np.asarray(eval_f(spec.f, probes)))), 0.5)
        rhs0 = SingularRHS.from_values(
            mesh, 2.0 * lam * c0 * np.ones(mesh.n_nodes) + spec.h.values, 0.5
        )
        alt = solve_S(rhs0, spec.p, mesh, default_solve_options(spec.p))
        result = exploratory_solve(spec, lam, u0=alt, tol=tol)
    return result.converged, (result.u if result.converged else None)


def find_threshold(
    spec: ProblemSpec,
    lambda_lo: float,
    lambda_hi: float,
    width_rel_tol: float = 0.01,
    prepared: PreparedProblem | None = None,
    fp_opts: FixedPointOptions | None = None,
    tol: float = 1e-8,
    trials: list | None = None,
) -> ThresholdEstimate:
    """Bisect the solvability flag between an unsolvable and a solvable lambda.

    Preconditions: the problem must fail at ``lambda_lo`` and succeed at
    ``lambda_hi``; otherwise a precondition error is raised (reason
    ``no_dichotomy`` when the low endpoint already solves).  Bisection is
    geometric and stops once the bracket width drops below
    ``width_rel_tol`` times the upper end.  Every probe is appended to
    ``trials`` (when given) as {"lambda": value, "solvable": flag}.
    """
    if not (0.0 < lambda_lo < lambda_hi):
        raise ValueError("need 0 < lambda_lo < lambda_hi")
    if prepared is None:
        prepared = prepare_problem(spec)

    def probe(lam, warm):
        ok, u = _attempt(prepared, lam, warm, fp_opts, tol)
        if trials is not None:
            trials.append({"lambda": float(lam), "solvable": bool(ok)})
        return ok, u

    ok_hi, u_hi = probe(lambda_hi, None)
    if not ok_hi:
        raise ThresholdPreconditionError(
            f"no solution found at the upper endpoint lambda = {lambda_hi!r}",
            reason="upper_endpoint_unsolvable",
        )
    ok_lo, _ = probe(lambda_lo, None)
    if ok_lo:
        raise ThresholdPreconditionError(
            f"both endpoints solvable; no dichotomy inside [{lambda_lo!r}, {lambda_hi!r}]",
            reason="no_dichotomy",
        )
    lo, hi = float(lambda_lo), float(lambda_hi)
    while hi - lo > width_rel_tol * hi:
        mid = float(np.sqrt(lo * hi))
        ok, u_mid = probe(mid, u_hi)
        if ok:
            hi, u_hi = mid, u_mid
        else:
            lo = mid
    return ThresholdEstimate(lambda0_lo=lo, lambda0_hi=hi, width=hi - lo)


@dataclass(frozen=True)
class MonotonicityReport:
    """Solvability flags along a probe list and whether they are sorted."""

    lambdas: tuple
    flags: tuple
    monotone: bool
    first_solvable: float | None


def solvability_monotonicity(
    spec: ProblemSpec,
    lambda_list,
    prepared: PreparedProblem | None = None,
    fp_opts: FixedPointOptions | None = None,
    tol: float = 1e-8,
) -> MonotonicityReport:
    """Probe solvability along increasing lambdas; flags should be sorted."""
    lams = [float(x) for x in lambda_list]
    if any(b <= a for a, b in zip(lams[:-1], lams[1:])):
        raise ValueError("probe list must be strictly increasing")
    if prepared is None:
        prepared = prepare_problem(spec)
    warm = None
    flags = []
    for lam in lams:
        ok, u = _attempt(prepared, lam, warm, fp_opts, tol)
        flags.append(bool(ok))
        if ok:
            warm = u
    monotone = all(b >= a for a, b in zip(flags[:-1], flags[1:]))
    first = next((lam for lam, f in zip(lams, flags) if f), None)
    return MonotonicityReport(
        lambdas=tuple(lams), flags=tuple(flags), monotone=monotone, first_solvable=first
    )


def branch_to_csv(branch: Branch) -> str:
    """CSV summary, one row per grid point, 17 significant digits."""
    lines = ["lambda,sup_norm,min_u_over_d,iterations,residual,converged,in_sandwich"]
    for pt in branch.points:
        lines.append(
            f"{pt.lam:.17g},{pt.sup_norm:.17g},{pt.min_u_over_d:.17g},"
            f"{pt.iterations},{pt.residual:.17g},{int(pt.converged)},{int(pt.in_sandwich)}"
        )
    return "\n".join(lines) + "\n"


def branch_to_json(branch: Branch, constants: dict, meta: dict | None = None) -> str:
    """JSON document with per-point summaries and the frozen constants."""
    doc = {
        "constants": constants,
        "lambda_star": branch.lambda_star,
        "lam_max": branch.lam_max,
        "points": [
            {
                "lambda": pt.lam,
                "sup_norm": pt.sup_norm,
                "min_u_over_d": pt.min_u_over_d,
                "iterations": pt.iterations,
                "residual": pt.residual,
                "converged": pt.converged,
                "in_sandwich": pt.in_sandwich,
            }
            for pt in branch.points
        ],
        "failures": branch.failures,
    }
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
