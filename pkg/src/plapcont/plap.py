"""Discrete p-Laplacian in edge-centered flux form, energy, and inequalities.

The operator acts on nodal values through edge fluxes F = |Du|^(p-2) Du,
divided by nodal cell volumes.  This finite-volume form keeps the discrete
operator monotone, which the comparison-based constructions downstream
rely on.  For p < 2 the flux magnitude is regularized near zero gradients;
for p >= 2 no regularization is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridFunction, Mesh

# Regularization of |Du| inside the p-2 power, applied only when p < 2
# (the flux coefficient is singular at critical points there).
GRAD_REG_EPS = 1e-10


@dataclass(frozen=True)
class PValue:
    """Validated exponent of the p-Laplacian, strictly between 1 and infinity."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v) or v <= 1.0:
            raise ValueError(f"p must be finite and > 1, got {self.value!r}")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value


def as_p(p: "PValue | float") -> float:
    """Coerce a PValue or plain number to a validated float exponent."""
    if isinstance(p, PValue):
        return p.value
    return PValue(float(p)).value


def _flux(du: np.ndarray, p: float) -> np.ndarray:
    """Edge flux |s|^(p-2) s, regularized below p = 2."""
    if p == 2.0:
        return du
    if p > 2.0:
        return np.abs(du) ** (p - 2.0) * du
    mag = np.sqrt(du * du + GRAD_REG_EPS * GRAD_REG_EPS)
    return mag ** (p - 2.0) * du


def _flux_derivative(du: np.ndarray, p: float) -> np.ndarray:
    """d/ds of the edge flux; strictly positive wherever defined."""
    if p == 2.0:
        return np.ones_like(du)
    if p > 2.0:
        return (p - 1.0) * np.abs(du) ** (p - 2.0)
    m2 = du * du + GRAD_REG_EPS * GRAD_REG_EPS
    return m2 ** ((p - 4.0) / 2.0) * ((p - 1.0) * du * du + GRAD_REG_EPS * GRAD_REG_EPS)


def _apply_values(u: np.ndarray, mesh: Mesh, p: float) -> np.ndarray:
    """Nodal values of the discrete -div(|Du|^(p-2) Du) on the full grid."""
    du = np.diff(u) / mesh.spacing
    sf = mesh.edge_sigma * _flux(du, p)
    out = np.zeros_like(u)
    # flux balance: node i sees edges (i-1,i) and (i,i+1); the first free
    # node of a radial grid is the symmetry node whose inner flux is zero.
    out[1:-1] = -(sf[1:] - sf[:-1]) / mesh.cell_volume[1:-1]
    if not mesh.is_dirichlet[0]:
        out[0] = -sf[0] / mesh.cell_volume[0]
    out[mesh.is_dirichlet] = 0.0
    return out


def apply_p_laplacian(u: GridFunction, p: "PValue | float") -> GridFunction:
    """Discrete -Delta_p u as a grid function (zero at Dirichlet nodes)."""
    pv = as_p(p)
    return GridFunction(u.mesh, _apply_values(u.values, u.mesh, pv), dirichlet=True)


def _edge_weights(mesh: Mesh) -> np.ndarray:
    return mesh.angular * mesh.edge_sigma * mesh.spacing


def _energy_values(u: np.ndarray, g: np.ndarray, mesh: Mesh, p: float) -> float:
    du = np.diff(u) / mesh.spacing
    if p < 2.0:
        mag = np.sqrt(du * du + GRAD_REG_EPS * GRAD_REG_EPS)
    else:
        mag = np.abs(du)
    with np.errstate(over="ignore"):  # wild line-search candidates read as +inf
        dirichlet_part = np.sum(mag**p * _edge_weights(mesh)) / p
    load_part = np.sum(g * u * mesh.weights)
    return float(dirichlet_part - load_part)


def energy(u: GridFunction, g: GridFunction, p: "PValue | float") -> float:
    """Discrete energy (1/p) sum |Du|^p w_edge - sum g u w_node.

    The unique minimizer over Dirichlet grid functions is the solution of
    the discrete problem -Delta_p u = g.
    """
    pv = as_p(p)
    return _energy_values(u.values, g.values, u.mesh, pv)


def _residual_values(u: np.ndarray, rhs: np.ndarray, mesh: Mesh, p: float) -> np.ndarray:
    """Weighted nodal residual (A(u) - rhs) * w at the free nodes."""
    au = _apply_values(u, mesh, p)
    fr = mesh.free
    return (au[fr] - rhs[fr]) * mesh.weights[fr]


def weak_residual(u: GridFunction, rhs: GridFunction, p: "PValue | float") -> float:
    """Max-norm of the weighted residual; the solver convergence figure."""
    pv = as_p(p)
    r = _residual_values(u.values, rhs.values, u.mesh, pv)
    return float(np.max(np.abs(r))) if r.size else 0.0


def weak_residual_l2(u: GridFunction, rhs: GridFunction, p: "PValue | float") -> float:
    """Scaled l2 companion of :func:`weak_residual`."""
    pv = as_p(p)
    r = _residual_values(u.values, rhs.values, u.mesh, pv)
    return float(np.sqrt(np.sum(r * r)))


def simon_gap(x: np.ndarray, y: np.ndarray, p: "PValue | float"):
    """Structure quantities of the vector inequality behind operator monotonicity.

    For vectors (or batches of vectors along the last axis) returns

        lhs      = (|x|^(p-2) x - |y|^(p-2) y) . (x - y)
        rhs_ge_2 = |x - y|^p
        rhs_le_2 = |x - y|^p / (1 + |x| + |y|)^(2-p)

    lhs dominates a calibrated constant times the branch matching the
    exponent (rhs_ge_2 for p >= 2, rhs_le_2 for p <= 2).
    """
    pv = as_p(p)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx = np.linalg.norm(x, axis=-1)
    ny = np.linalg.norm(y, axis=-1)
    diff = x - y
    nd = np.linalg.norm(diff, axis=-1)
    if pv == 2.0:
        fx, fy = x, y
    else:
        fx = np.where(nx > 0.0, nx ** (pv - 2.0), 0.0)[..., None] * x
        fy = np.where(ny > 0.0, ny ** (pv - 2.0), 0.0)[..., None] * y
    lhs = np.sum((fx - fy) * diff, axis=-1)
    rhs_ge = nd**pv
    rhs_le = rhs_ge / (1.0 + nx + ny) ** (2.0 - pv)
    return lhs, rhs_ge, rhs_le


@dataclass(frozen=True)
class ComparisonReport:
    """Outcome of a nodewise comparison check between two grid functions."""

    premise_holds: bool
    premise_excess: float
    ordered: bool
    violation: float


def check_weak_comparison(
    u: GridFunction,
    v: GridFunction,
    p: "PValue | float",
    premise_tol: float = 1e-10,
    order_tol: float = 1e-10,
) -> ComparisonReport:
    """Check whether A(u) <= A(v) nodewise forces u <= v nodewise.

    ``premise_excess`` is the largest amount by which A(u) exceeds A(v);
    ``violation`` the largest amount by which u exceeds v.  For the
    monotone flux discretization an ordered premise yields an ordered
    conclusion up to solver tolerances.
    """
    pv = as_p(p)
    fr = u.mesh.free
    au = _apply_values(u.values, u.mesh, pv)[fr]
    av = _apply_values(v.values, v.mesh, pv)[fr]
    premise_excess = float(np.max(au - av, initial=0.0))
    violation = float(np.max(u.values[fr] - v.values[fr], initial=0.0))
    return ComparisonReport(
        premise_holds=premise_excess <= premise_tol,
        premise_excess=premise_excess,
        ordered=violation <= order_tol,
        violation=violation,
    )


def hardy_ratio(u: GridFunction, d: GridFunction, p: "PValue | float") -> float:
    """Ratio sum |u/d| w over (sum |Du|^p w_edge)^(1/p) for Dirichlet u.

    Used by the property suite against a frozen calibrated constant.  The
    quotient u/d is taken over free nodes only (both vanish on the
    boundary).
    """
    pv = as_p(p)
    mesh = u.mesh
    fr = mesh.free
    lhs = float(np.sum(np.abs(u.values[fr] / d.values[fr]) * mesh.weights[fr]))
    du = np.diff(u.values) / mesh.spacing
    rhs = float(np.sum(np.abs(du) ** pv * _edge_weights(mesh)) ** (1.0 / pv))
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else np.inf
    return lhs / rhs
