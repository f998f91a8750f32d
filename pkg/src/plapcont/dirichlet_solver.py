"""Solution operator for -Delta_p u = g with distance-singular right-hand sides.

Admissible loads are nodal data bounded by C / d(x)^beta with beta in
(0, 1), where d is the distance to the Dirichlet boundary.  The solve is
a damped Newton iteration on the weighted residual with an energy line
search and direct tridiagonal inner solves; if Newton stalls it falls
back to damped lagged-coefficient sweeps.  A cutoff variant swaps the
load for an alternative profile on the strip d < eps near the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded

from .grid import GridFunction, Mesh, distance_field
from .plap import GRAD_REG_EPS, _apply_values, _energy_values, _flux_derivative, as_p


class SolverFailure(RuntimeError):
    """Newton and the fallback sweeps both failed to reach tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last weighted residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolveOptions:
    """Knobs for the nonlinear Dirichlet solve."""

    tol_residual: float = 1e-10
    max_newton: int = 60
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 45
    picard_fallback_steps: int = 200
    u_floor: float = 1e-13

    def __post_init__(self):
        if self.tol_residual <= 0.0 or self.u_floor <= 0.0:
            raise ValueError("tolerances and floors must be positive")


def default_solve_options(p: float, tight: bool = False) -> SolveOptions:
    """Residual tolerance 1e-10 for p = 2 and 1e-8 otherwise.

    ``tight`` requests the stricter tolerances used inside barrier and
    fixed-point constructions, where downstream inequality margins
    depend on the inner solve quality.  Below p = 2 the fallback sweeps
    carry most of the convergence (the flux has a cusp where the
    gradient vanishes), so they get a larger budget.
    """
    pv = as_p(p)
    if pv == 2.0:
        return SolveOptions(tol_residual=1e-12 if tight else 1e-10)
    sweeps = 1200 if pv < 2.0 else 300
    return SolveOptions(tol_residual=1e-10 if tight else 1e-8,
                        picard_fallback_steps=sweeps)


@dataclass(frozen=True, eq=False)
class SingularRHS:
    """Nodal load g with a certified bound |g| <= C / d^beta at free nodes."""

    mesh: Mesh
    values: np.ndarray
    weight_constant: float
    beta: float

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.mesh.n_nodes,):
            raise ValueError("load values must cover every node")
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must lie in (0, 1), got {self.beta!r}")
        if not (self.weight_constant > 0.0 and np.isfinite(self.weight_constant)):
            raise ValueError("weight constant must be positive and finite")
        d = distance_field(self.mesh).values[self.mesh.free]
        bound = self.weight_constant * d ** (-self.beta)
        if np.any(np.abs(vals[self.mesh.free]) > bound * (1.0 + 1e-9)):
            worst = int(np.argmax(np.abs(vals[self.mesh.free]) - bound))
            raise ValueError(
                f"load violates |g| <= C/d^beta at free node {self.mesh.free[worst]}"
            )

    @classmethod
    def from_values(cls, mesh: Mesh, values: np.ndarray, beta: float) -> "SingularRHS":
        """Wrap nodal values with the smallest admissible weight constant."""
        vals = np.asarray(values, dtype=float)
        d = distance_field(mesh).values[mesh.free]
        c = float(np.max(np.abs(vals[mesh.free]) * d**beta, initial=0.0))
        c = max(c, 1e-300) * (1.0 + 1e-12)
        return cls(mesh=mesh, values=vals, weight_constant=c, beta=beta)


def _tridiag_solve(lower, diag, upper, rhs):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)


def _linearized_step(u, rhs_vals, mesh, p, coeff):
    """Solve the linear problem -div(sigma * coeff * Dv) = rhs on free nodes.

    ``coeff`` is a per-edge coefficient; returns full nodal values with the
    Dirichlet entries zeroed.  Raises LinAlgError for singular systems.
    """
    h = mesh.spacing
    fr = mesh.free
    vol = mesh.cell_volume[fr]
    a = mesh.edge_sigma * coeff / h  # conductance per edge
    n = fr.size
    diag = np.zeros(n)
    lower = np.zeros(n)
    upper = np.zeros(n)
    first = fr[0]
    # edge e connects nodes e and e+1; free nodes are contiguous
    right = a[first : first + n]  # edge to the right of each free node
    if first == 0:
        left = np.concatenate(([0.0], a[0 : n - 1]))  # symmetry node: no inner edge
    else:
        left = a[first - 1 : first - 1 + n]
    diag = (left + right) / vol
    lower[1:] = -a[first : first + n - 1] / vol[1:]
    upper[:-1] = -a[first : first + n - 1] / vol[:-1]
    sol = _tridiag_solve(lower, diag, upper, rhs_vals[fr])
    full = np.zeros(mesh.n_nodes)
    full[fr] = sol
    return full


def _newton_direction(u, res_free, mesh, p):
    du = np.diff(u) / mesh.spacing
    coeff = _flux_derivative(du, p)
    # flat edges (du ~ 0, p > 2) make the true Jacobian nearly singular
    # there; floor those coefficients relative to the problem's own scale
    # so the direction stays bounded (modified-Hessian Newton)
    scale = float(np.max(coeff, initial=0.0))
    if scale <= 0.0:
        coeff = np.ones_like(coeff)  # fully flat iterate: take the linear step
    else:
        coeff = np.maximum(coeff, 1e-8 * scale)
    neg = np.zeros(mesh.n_nodes)
    neg[mesh.free] = -res_free
    return _linearized_step(u, neg, mesh, p, coeff)


def _kacanov_sweeps(u, gv, mesh, p, opts, steps, tol):
    """Damped lagged-coefficient sweeps; returns the improved iterate."""
    current = u.copy()
    e_curr = _energy_values(current, gv, mesh, p)
    for _ in range(steps):
        du = np.diff(current) / mesh.spacing
        mag = np.sqrt(du * du + GRAD_REG_EPS**2)
        coeff = np.maximum(mag ** (p - 2.0), 1e-12)
        try:
            target = _linearized_step(current, gv, mesh, p, coeff)
        except np.linalg.LinAlgError:
            break
        step = target - current
        t = 1.0
        improved = False
        for _ in range(30):
            cand = current + t * step
            e_cand = _energy_values(cand, gv, mesh, p)
            if e_cand < e_curr:
                current, e_curr = cand, e_cand
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        res = np.max(np.abs((_apply_values(current, mesh, p) - gv)[mesh.free] * mesh.weights[mesh.free]))
        if res <= tol:
            break
    return current


def solve_S(
    g: SingularRHS,
    p: "float",
    mesh: Mesh | None = None,
    opts: SolveOptions | None = None,
    initial: GridFunction | None = None,
) -> GridFunction:
    """Solve -Delta_p u = g with homogeneous Dirichlet data.

    The default initial iterate is the linear (p = 2) solve of the same
    load, which Newton then corrects; for p = 2 that start already
    satisfies the system.  Convergence is declared on the weighted
    max-norm residual.
    """
    pv = as_p(p)
    mesh = mesh if mesh is not None else g.mesh
    if mesh is not g.mesh:
        raise ValueError("mesh does not match the load's mesh")
    if opts is None:
        opts = default_solve_options(pv)
    gv = g.values

    if initial is not None:
        u = initial.values.copy()
    else:
        u = _linearized_step(np.zeros(mesh.n_nodes), gv, mesh, pv, np.ones(mesh.n_edges))
    u[mesh.is_dirichlet] = 0.0

    fr = mesh.free
    w = mesh.weights[fr]
    # the reachable absolute residual floors at roundoff times the load
    # scale, so the tolerance is relative above unit loads
    tol = opts.tol_residual * max(1.0, float(np.max(np.abs(gv[fr]), initial=0.0)))
    last_res = np.inf
    stalls = 0
    for _ in range(opts.max_newton):
        res_free = (_apply_values(u, mesh, pv) - gv)[fr]
        res = float(np.max(np.abs(res_free * w)))
        if res <= tol:
            return GridFunction(mesh, u, dirichlet=True)
        try:
            direction = _newton_direction(u, res_free, mesh, pv)
        except np.linalg.LinAlgError:
            direction = None
        took_step = False
        if direction is not None and np.all(np.isfinite(direction)):
            # trust-region style cap so degenerate Jacobians cannot launch
            # the line search from an astronomically large candidate
            cap = 10.0 * (1.0 + float(np.max(np.abs(u))))
            d_sup = float(np.max(np.abs(direction)))
            if d_sup > cap:
                direction = direction * (cap / d_sup)
            slope = float(np.sum(res_free * w * direction[fr]))  # grad J . step
            e0 = _energy_values(u, gv, mesh, pv)
            t = 1.0
            for _ in range(opts.max_backtracks):
                cand = u + t * direction
                energy_ok = _energy_values(cand, gv, mesh, pv) <= e0 + opts.armijo * t * slope
                if not energy_ok:
                    # near the minimum, energy increments drop below rounding;
                    # accept on a plain residual decrease instead
                    cand_res = float(
                        np.max(np.abs((_apply_values(cand, mesh, pv) - gv)[fr] * w))
                    )
                    energy_ok = cand_res <= (1.0 - opts.armijo * t) * res
                if energy_ok:
                    u = cand
                    took_step = True
                    break
                t *= opts.backtrack
        if not took_step or res >= 0.5 * last_res:
            stalls += 1
        else:
            stalls = 0
        if not took_step or stalls >= 8:
            u = _kacanov_sweeps(u, gv, mesh, pv, opts, opts.picard_fallback_steps, tol)
            stalls = 0
        last_res = res

    res_free = (_apply_values(u, mesh, pv) - gv)[fr]
    res = float(np.max(np.abs(res_free * w)))
    if res <= tol:
        return GridFunction(mesh, u, dirichlet=True)
    raise SolverFailure("Newton did not reach the residual tolerance", res)


def solve_cutoff(
    g: SingularRHS,
    g_tilde: GridFunction | np.ndarray,
    eps: float,
    p: "float",
    mesh: Mesh | None = None,
    opts: SolveOptions | None = None,
) -> GridFunction:
    """Solve with load g where d > eps and the alternative profile elsewhere.

    Requires g >= 0 (not identically zero).  With eps = 0 the result is
    the plain solve of g.
    """
    pv = as_p(p)
    mesh = mesh if mesh is not None else g.mesh
    if mesh is not g.mesh:
        raise ValueError("mesh does not match the load's mesh")
    if eps < 0.0:
        raise ValueError(f"cutoff width must be nonnegative, got {eps!r}")
    fr = mesh.free
    if np.any(g.values[fr] < 0.0):
        raise ValueError("cutoff solve requires a nonnegative base load")
    if not np.any(g.values[fr] > 0.0):
        raise ValueError("cutoff solve requires a nontrivial base load")
    gt = g_tilde.values if isinstance(g_tilde, GridFunction) else np.asarray(g_tilde, float)
    d = distance_field(mesh).values
    mixed = np.where(d > eps, g.values, gt)
    rhs = SingularRHS.from_values(mesh, mixed, g.beta)
    return solve_S(rhs, pv, mesh, opts)


class Eps0NotFoundError(RuntimeError):
    """No cutoff width on the dyadic search grid kept u_eps >= u/2."""


def find_eps0(
    g: SingularRHS,
    g_tilde: GridFunction | np.ndarray,
    p: "float",
    mesh: Mesh | None = None,
    opts: SolveOptions | None = None,
    k_max: int = 14,
) -> float:
    """Largest dyadic cutoff width below which the half-comparison holds.

    Scans eps = 2^-k for k = 1..k_max and returns the largest eps such
    that every tested width <= eps keeps the cutoff solution above half
    the uncut solution nodewise.
    """
    pv = as_p(p)
    mesh = mesh if mesh is not None else g.mesh
    base = solve_S(g, pv, mesh, opts)
    slack = 1e-9 * max(base.sup_norm, 1e-30)
    fr = mesh.free
    qualifies = []
    for k in range(1, k_max + 1):
        eps = 2.0**-k
        ueps = solve_cutoff(g, g_tilde, eps, pv, mesh, opts)
        ok = bool(np.all(ueps.values[fr] >= 0.5 * base.values[fr] - slack))
        qualifies.append(ok)
    best = None
    for k in range(k_max, 0, -1):  # smallest eps first
        if not qualifies[k - 1]:
            break
        best = 2.0**-k
    if best is None:
        raise Eps0NotFoundError("u_eps >= u/2 failed even at the smallest tested width")
    return best
