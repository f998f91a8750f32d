"""Ordered sub- and supersolution barriers for the singular reaction problem.

The construction follows the comparison route: an auxiliary profile phi
solving -Delta_p phi = phi^-beta sets the boundary behaviour; a second
profile psi solves a cutoff problem whose load is a positive multiple of
phi^-beta away from the boundary and a small negative multiple near it.
The lower barrier is lambda^r psi with r = 1/(p + beta - 1); it works for
every lambda past an explicit onset lambda_star.  The upper barrier is a
multiple M phi with M absorbing the load ceiling, the large-argument
slope of f, and the sup norm of the additive forcing, each with a
factor-two safety margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .eigen import EigenPair, comparability_constants, first_eigenpair
from .grid import GridFunction, Mesh, distance_field
from .nonlin import AssumptionReport, Nonlinearity, eval_f, validate_assumptions
from .plap import apply_p_laplacian, as_p
from .dirichlet_solver import (
    Eps0NotFoundError,
    SingularRHS,
    SolveOptions,
    default_solve_options,
    find_eps0,
    solve_S,
    solve_cutoff,
)


class BarrierConstructionError(RuntimeError):
    """A barrier inequality failed at some node during construction."""

    def __init__(self, message: str, node: int | None = None):
        if node is not None:
            message = f"{message} (node {node})"
        super().__init__(message)
        self.node = node


def solve_singular_phi(
    m: float,
    beta: float,
    p: "float",
    mesh: Mesh,
    tol: float = 1e-9,
    max_iter: int = 300,
    opts: SolveOptions | None = None,
) -> GridFunction:
    """Fixed point of u -> S(m / max(u, floor)^beta), started from S(m).

    The plain iteration contracts when beta/(p-1) < 1; when it starts to
    ping-pong instead, the loop switches to averaged steps, which target
    the same fixed point.  Convergence is declared on the sup increment
    of the undamped map.
    """
    pv = as_p(p)
    if not (m > 0.0):
        raise ValueError(f"load scale must be positive, got {m!r}")
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta must lie in (0, 1), got {beta!r}")
    if opts is None:
        opts = default_solve_options(pv, tight=True)
    u = solve_S(SingularRHS.from_values(mesh, np.full(mesh.n_nodes, m), beta), pv, mesh, opts)
    floor = opts.u_floor
    averaged = False
    increments: list[float] = []
    for k in range(max_iter):
        load = m * np.maximum(u.values, floor) ** (-beta)
        load[mesh.is_dirichlet] = 0.0
        g = SingularRHS.from_values(mesh, load, beta)
        v = solve_S(g, pv, mesh, opts, initial=u)
        inc = float(np.max(np.abs(v.values - u.values)))
        increments.append(inc)
        if inc <= tol:
            return v
        if not averaged and k >= 6 and inc > 0.9 * increments[-3]:
            averaged = True  # oscillating; switch to averaged steps
        if averaged:
            u = GridFunction(mesh, 0.5 * (u.values + v.values), dirichlet=True)
        else:
            u = v
    raise BarrierConstructionError(
        f"singular profile iteration did not converge (last increment {increments[-1]:.3e})"
    )


class LowerConstants(NamedTuple):
    r: float
    delta: float
    gamma: float
    lambda_star: float


def lower_constants(
    report: AssumptionReport,
    p: "float",
    c1: float,
    eps_cut: float,
) -> LowerConstants:
    """Explicit constants for the lower barrier; pure arithmetic.

    ``c1`` is the comparability constant of the auxiliary profile against
    the boundary distance (phi >= c1 d at free nodes).  The onset
    lambda_star guarantees that past it the scaled barrier exceeds the
    lower-bound onset of f away from the boundary strip.
    """
    pv = as_p(p)
    if not report.passed:
        raise ValueError("assumption report has failing checks")
    if not (c1 > 0.0 and eps_cut > 0.0):
        raise ValueError("comparability constant and cutoff width must be positive")
    beta = report.beta
    r = 1.0 / (pv + beta - 1.0)
    delta = report.a_const ** ((pv - 1.0) / (beta - 1.0 + pv))
    gamma = 2.0**beta * report.b_const * delta ** (-beta / (pv - 1.0))
    lambda_star = (2.0 * report.a_onset / (c1 * eps_cut * delta ** (1.0 / (pv - 1.0)))) ** (1.0 / r)
    return LowerConstants(r=r, delta=delta, gamma=gamma, lambda_star=lambda_star)


def build_psi(
    delta: float,
    gamma: float,
    beta: float,
    eps_cut: float,
    phi: GridFunction,
    p: "float",
    opts: SolveOptions | None = None,
    slack_rel: float = 1e-8,
) -> GridFunction:
    """Cutoff profile between half of and all of delta^(1/(p-1)) phi.

    Solves the problem loaded by delta phi^-beta away from the boundary
    and -gamma phi^-beta on the strip d < eps_cut, then asserts the
    two-sided comparison against the scaled profile before returning.
    """
    pv = as_p(p)
    mesh = phi.mesh
    if opts is None:
        opts = default_solve_options(pv, tight=True)
    fr = mesh.free
    base = np.zeros(mesh.n_nodes)
    base[fr] = phi.values[fr] ** (-beta)
    g = SingularRHS.from_values(mesh, delta * base, beta)
    g_tilde = -gamma * base
    psi = solve_cutoff(g, g_tilde, eps_cut, pv, mesh, opts)
    scale = delta ** (1.0 / (pv - 1.0))
    hi = scale * phi.values[fr]
    lo = 0.5 * hi
    slack = slack_rel * max(float(np.max(hi)), 1e-30)
    below = psi.values[fr] - (lo - slack)
    if np.any(below < 0.0):
        node = int(fr[np.argmin(below)])
        raise BarrierConstructionError("cutoff profile fell under half the scaled profile", node)
    above = (hi + slack) - psi.values[fr]
    if np.any(above < 0.0):
        node = int(fr[np.argmin(above)])
        raise BarrierConstructionError("cutoff profile exceeded the scaled profile", node)
    return psi


def lower_solution(lam: float, pack: "BarrierPack") -> GridFunction:
    """Scaled lower barrier lambda^r psi; defined for lambda >= lambda_star."""
    if lam < pack.lambda_star * (1.0 - 1e-12):
        raise ValueError(
            f"lower barrier needs lambda >= lambda_star = {pack.lambda_star:.6e}, got {lam!r}"
        )
    mesh = pack.psi.mesh
    return GridFunction(mesh, lam**pack.r * pack.psi.values, dirichlet=True)


@dataclass(frozen=True, eq=False)
class UpperPack:
    """Upper barrier M phi for one truncation ceiling Lambda."""

    m_const: float
    eps_bar: float
    a1_split: float
    c_split: float
    lam_max: float
    u_upper: GridFunction


def upper_constants(
    Lambda: float,
    report: AssumptionReport,
    h_sup: float,
    phi: GridFunction,
    p: "float",
    delta: float,
    r: float,
) -> UpperPack:
    """Upper barrier constants for all lambda in [lambda_star, Lambda].

    eps_bar is set to half the admissible ceiling, so that
    Lambda eps_bar ||phi||^(p-1+beta) = 1/8 < 1/4.  M absorbs the three
    load contributions with factor-two margins and dominates the scaled
    lower barrier, which keeps the two barriers ordered.
    """
    pv = as_p(p)
    if not (Lambda > 0.0 and h_sup >= 0.0):
        raise ValueError("Lambda must be positive, h_sup nonnegative")
    beta = report.beta
    phi_sup = phi.sup_norm
    eps_bar = 1.0 / (8.0 * Lambda * phi_sup ** (pv - 1.0 + beta))
    a1, c_split = report.split_for(eps_bar)
    m1 = Lambda**r * delta ** (1.0 / (pv - 1.0))
    m2 = (4.0 * Lambda * c_split) ** (1.0 / (pv + beta - 1.0))
    m3 = (4.0 * h_sup * phi_sup**beta) ** (1.0 / (pv - 1.0))
    m_const = max(m1, m2, m3)
    report.eps_bar_table[Lambda] = {"eps_bar": eps_bar, "a1": a1, "c": c_split}
    u_upper = GridFunction(phi.mesh, m_const * phi.values, dirichlet=True)
    return UpperPack(
        m_const=m_const,
        eps_bar=eps_bar,
        a1_split=a1,
        c_split=c_split,
        lam_max=Lambda,
        u_upper=u_upper,
    )


@dataclass(frozen=True, eq=False)
class BarrierPack:
    """Everything the lower barrier needs, plus the profiles themselves."""

    phi: GridFunction
    psi: GridFunction
    delta: float
    gamma: float
    r: float
    eps_cut: float
    lambda_star: float
    eps_m: float


@dataclass(frozen=True)
class MarginReport:
    """Nodewise margin of a differential inequality; positive means satisfied."""

    passed: bool
    worst_margin: float
    worst_node: int
    margins: np.ndarray


def verify_subsolution(
    u_low: GridFunction,
    lam: float,
    f: Nonlinearity,
    h: GridFunction,
    p: "float",
    slack: float = 1e-7,
) -> MarginReport:
    """Check -Delta_p u_low <= lam f(u_low) + h nodewise at free nodes."""
    pv = as_p(p)
    mesh = u_low.mesh
    fr = mesh.free
    lhs = apply_p_laplacian(u_low, pv).values[fr]
    rhs = lam * np.asarray(eval_f(f, u_low.values[fr])) + h.values[fr]
    margins = rhs - lhs
    worst = int(np.argmin(margins))
    return MarginReport(
        passed=bool(margins[worst] >= -slack),
        worst_margin=float(margins[worst]),
        worst_node=int(fr[worst]),
        margins=margins,
    )


def verify_supersolution(
    u_up: GridFunction,
    lam: float,
    f: Nonlinearity,
    h: GridFunction,
    p: "float",
    slack: float = 1e-7,
) -> MarginReport:
    """Check -Delta_p u_up >= lam f(u_up) + h nodewise at free nodes."""
    pv = as_p(p)
    mesh = u_up.mesh
    fr = mesh.free
    lhs = apply_p_laplacian(u_up, pv).values[fr]
    rhs = lam * np.asarray(eval_f(f, u_up.values[fr])) + h.values[fr]
    margins = lhs - rhs
    worst = int(np.argmin(margins))
    return MarginReport(
        passed=bool(margins[worst] >= -slack),
        worst_margin=float(margins[worst]),
        worst_node=int(fr[worst]),
        margins=margins,
    )


@dataclass(frozen=True, eq=False)
class BarrierBuild:
    """Result of the full barrier construction with its diagnostics."""

    pack: BarrierPack
    report: AssumptionReport
    eigen: EigenPair
    c1_phi: float
    c2_phi: float
    c1_eig: float
    c2_eig: float
    eps0: float


def build_barrier_pack(
    mesh: Mesh,
    p: "float",
    f: Nonlinearity,
    report: AssumptionReport | None = None,
    eigen: EigenPair | None = None,
    opts: SolveOptions | None = None,
    phi_tol: float = 1e-10,
) -> BarrierBuild:
    """Run the whole lower-barrier construction on one mesh.

    Computes (or reuses) the growth certificates and the first eigenpair,
    builds the auxiliary profile, locates the admissible cutoff width on
    the dyadic grid, freezes eps_cut at half of it, and assembles the
    cutoff profile and the explicit constants.
    """
    pv = as_p(p)
    if report is None:
        report = validate_assumptions(f, pv)
    if not report.passed:
        raise BarrierConstructionError(f"growth hypotheses failed: {report.checks}")
    if opts is None:
        opts = default_solve_options(pv, tight=True)
    if eigen is None:
        eigen = first_eigenpair(pv, mesh, opts=opts)
    d = distance_field(mesh)
    c1_eig, c2_eig = comparability_constants(eigen.phi1, d)

    phi = solve_singular_phi(1.0, report.beta, pv, mesh, tol=phi_tol, opts=opts)
    c1_phi, c2_phi = comparability_constants(phi, d)
    eps_m = float(np.min(phi.values[mesh.free] / eigen.phi1.values[mesh.free]))

    consts0 = lower_constants(report, pv, c1_phi, eps_cut=1.0)  # eps enters later
    fr = mesh.free
    base = np.zeros(mesh.n_nodes)
    base[fr] = phi.values[fr] ** (-report.beta)
    g = SingularRHS.from_values(mesh, consts0.delta * base, report.beta)
    g_tilde = -consts0.gamma * base
    eps0 = find_eps0(g, g_tilde, pv, mesh, opts)

    eps_cut = eps0 / 2.0
    last_err: BarrierConstructionError | None = None
    for _ in range(4):
        try:
            psi = build_psi(consts0.delta, consts0.gamma, report.beta, eps_cut, phi, pv, opts)
            break
        except BarrierConstructionError as err:  # halve and retry
            last_err = err
            eps_cut /= 2.0
    else:
        raise last_err
    consts = lower_constants(report, pv, c1_phi, eps_cut)
    pack = BarrierPack(
        phi=phi,
        psi=psi,
        delta=consts.delta,
        gamma=consts.gamma,
        r=consts.r,
        eps_cut=eps_cut,
        lambda_star=consts.lambda_star,
        eps_m=eps_m,
    )
    return BarrierBuild(
        pack=pack,
        report=report,
        eigen=eigen,
        c1_phi=c1_phi,
        c2_phi=c2_phi,
        c1_eig=c1_eig,
        c2_eig=c2_eig,
        eps0=eps0,
    )
