"""First eigenpair of the discrete p-Laplacian and distance comparability.

The ground state is computed by inverse iteration: each sweep solves the
nonlinear Dirichlet problem with the previous normalized iterate (raised
to the p-1 power) as load, renormalizes in the sup norm, and refreshes
the Rayleigh quotient.  Iteration stops when the weighted eigen-residual
is small.  The eigenfunction is positive inside, sup-normalized to one,
and its one-sided boundary slopes are strictly negative, which yields
two-sided comparability with the boundary distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridFunction, Mesh, distance_field
from .plap import _apply_values, _edge_weights, as_p, weak_residual
from .dirichlet_solver import SingularRHS, SolveOptions, SolverFailure, default_solve_options, solve_S


@dataclass(frozen=True, eq=False)
class EigenPair:
    """First eigenvalue, sup-normalized eigenfunction, and boundary slopes."""

    lambda1: float
    phi1: GridFunction
    boundary_slope: np.ndarray


def rayleigh_quotient(u: GridFunction, p: "float") -> float:
    """Dirichlet energy over the p-th power nodal mass of u."""
    pv = as_p(p)
    mesh = u.mesh
    du = np.diff(u.values) / mesh.spacing
    num = float(np.sum(np.abs(du) ** pv * _edge_weights(mesh)))
    den = float(np.sum(np.abs(u.values) ** pv * mesh.weights))
    return num / den


def _boundary_slopes(phi: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Outward one-sided differences at each Dirichlet node."""
    slopes = []
    h = mesh.spacing
    idx = np.flatnonzero(mesh.is_dirichlet)
    for i in idx:
        if i == 0:
            slopes.append((phi[0] - phi[1]) / h)
        else:
            slopes.append((phi[i] - phi[i - 1]) / h)
    return np.asarray(slopes)


def first_eigenpair(
    p: "float",
    mesh: Mesh,
    tol: float = 1e-9,
    max_iter: int = 400,
    opts: SolveOptions | None = None,
    u0: GridFunction | None = None,
) -> EigenPair:
    """Ground-state eigenpair of -Delta_p phi = lambda |phi|^(p-2) phi."""
    pv = as_p(p)
    if opts is None:
        opts = default_solve_options(pv, tight=True)
    if u0 is None:
        u0 = distance_field(mesh)
    if u0.sup_norm <= 0.0 or np.any(u0.values[mesh.free] < 0.0):
        raise ValueError("starting guess must be nonnegative with a positive sup norm")
    phi = u0.values / u0.sup_norm
    lam = rayleigh_quotient(GridFunction(mesh, phi), pv)
    warm: GridFunction | None = None
    gf = GridFunction(mesh, phi)
    for _ in range(max_iter):
        load = lam * np.abs(phi) ** (pv - 1.0) * np.sign(phi)
        rhs = SingularRHS.from_values(mesh, load, beta=0.5)
        v = solve_S(rhs, pv, mesh, opts, initial=warm)
        warm = v
        phi = v.values / v.sup_norm
        gf = GridFunction(mesh, phi)
        lam = rayleigh_quotient(gf, pv)
        target = GridFunction(mesh, lam * np.abs(phi) ** (pv - 1.0) * np.sign(phi))
        # the load scale is lam itself (phi is sup-normalized), so the
        # stopping rule is relative above unit eigenvalue
        if weak_residual(gf, target, pv) <= tol * max(1.0, lam):
            break
    else:
        raise SolverFailure("inverse iteration did not reach the eigen tolerance",
                            weak_residual(gf, target, pv))
    fr = mesh.free
    if np.any(phi[fr] <= 0.0):
        raise SolverFailure("eigenfunction lost interior positivity", 0.0)
    slopes = _boundary_slopes(phi, mesh)
    if np.any(slopes >= 0.0):
        raise SolverFailure("eigenfunction boundary slope is not strictly negative", 0.0)
    return EigenPair(lambda1=float(lam), phi1=gf, boundary_slope=slopes)


def comparability_constants(phi1: GridFunction, d: GridFunction) -> tuple[float, float]:
    """Constants (C1, C2) with C1 d <= phi1 <= C2 d over the free nodes.

    Requires a positive numerator inside; both constants are finite and
    positive because the distance field is positive at free nodes.
    """
    fr = phi1.mesh.free
    ratio = phi1.values[fr] / d.values[fr]
    if np.any(phi1.values[fr] <= 0.0):
        raise ValueError("comparability requires interior positivity")
    return float(np.min(ratio)), float(np.max(ratio))
