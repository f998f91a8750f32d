"""Problem container tying together exponent, domain, reaction, and forcing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barriers import BarrierBuild, build_barrier_pack, upper_constants, UpperPack
from .grid import GridFunction, Mesh
from .nonlin import Nonlinearity
from .plap import as_p
from .dirichlet_solver import SolveOptions


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One instance of -Delta_p u = lambda f(u) + h on a fixed mesh.

    ``lambda_range`` is optional metadata for drivers that sweep the load
    parameter; the solves themselves always receive lambda explicitly.
    The forcing h must be nonnegative.
    """

    p: float
    mesh: Mesh
    f: Nonlinearity
    h: GridFunction
    lambda_range: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", as_p(self.p))
        if np.any(self.h.values[self.mesh.free] < 0.0):
            raise ValueError("forcing h must be nonnegative")


@dataclass(frozen=True, eq=False)
class PreparedProblem:
    """Barrier construction attached to a problem, reusable across lambdas."""

    spec: ProblemSpec
    build: BarrierBuild

    @property
    def pack(self):
        return self.build.pack

    @property
    def report(self):
        return self.build.report

    def upper_for(self, lam_max: float) -> UpperPack:
        """Upper barrier constants covering lambdas up to ``lam_max``."""
        h_sup = float(np.max(self.spec.h.values[self.spec.mesh.free], initial=0.0))
        return upper_constants(
            lam_max,
            self.report,
            h_sup,
            self.pack.phi,
            self.spec.p,
            self.pack.delta,
            self.pack.r,
        )


def prepare_problem(spec: ProblemSpec, opts: SolveOptions | None = None) -> PreparedProblem:
    """Validate the growth hypotheses and build the barrier profiles once."""
    build = build_barrier_pack(spec.mesh, spec.p, spec.f, opts=opts)
    return PreparedProblem(spec=spec, build=build)
