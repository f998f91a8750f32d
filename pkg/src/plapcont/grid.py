"""Discrete domains for the one-dimensional and radially symmetric solves.

Two mesh flavours are supported: a uniform grid on the open unit interval
with homogeneous Dirichlet ends, and a uniform radial grid on a ball of
radius R in dimension N, reduced to the radial coordinate.  The radial
grid keeps r = 0 as a zero-flux symmetry node and treats only r = R as a
Dirichlet node.  Quadrature weights are cell volumes (times the angular
measure of the unit sphere for radial grids), so they sum to the measure
of the domain exactly and every node owns a strictly positive weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidMeshError(ValueError):
    """Raised when mesh construction parameters are out of range."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=float))
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Mesh:
    """Uniform 1-D mesh with quadrature weights and Dirichlet bookkeeping.

    ``coords`` holds every node including boundary nodes.  ``weights`` are
    nodal quadrature weights (cell volumes scaled by the angular factor).
    ``cell_volume`` is the radial cell measure without the angular factor;
    the divergence-form operator divides fluxes by it.  ``edge_sigma`` is
    the face measure r^(N-1) at edge midpoints (all ones on the interval).
    """

    kind: str
    n_interior: int
    spacing: float
    coords: np.ndarray
    weights: np.ndarray
    is_dirichlet: np.ndarray
    free: np.ndarray
    cell_volume: np.ndarray
    edge_sigma: np.ndarray
    angular: float
    dim: int = 1
    radius: float | None = None

    @property
    def n_nodes(self) -> int:
        return self.coords.size

    @property
    def n_edges(self) -> int:
        return self.coords.size - 1

    def __repr__(self) -> str:  # keep reprs short, the arrays are large
        return (
            f"Mesh(kind={self.kind!r}, n_interior={self.n_interior}, "
            f"dim={self.dim}, spacing={self.spacing:.3e})"
        )


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Immutable nodal values attached to a mesh.

    Functions flagged ``dirichlet`` must vanish exactly on Dirichlet
    nodes; general data (loads, coefficients) may carry the flag False.
    """

    mesh: Mesh
    values: np.ndarray
    dirichlet: bool = True

    def __post_init__(self):
        vals = _readonly(self.values)
        if vals.shape != (self.mesh.n_nodes,):
            raise ValueError(
                f"expected {self.mesh.n_nodes} nodal values, got shape {vals.shape}"
            )
        if self.dirichlet and np.any(vals[self.mesh.is_dirichlet] != 0.0):
            raise ValueError("Dirichlet grid function must vanish exactly on boundary nodes")
        object.__setattr__(self, "values", vals)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def interior(self) -> np.ndarray:
        """Values at the free (non-Dirichlet) nodes."""
        return self.values[self.mesh.free]


def build_interval_mesh(n_interior: int) -> Mesh:
    """Uniform mesh on (0, 1) with ``n_interior`` interior nodes."""
    if not isinstance(n_interior, (int, np.integer)) or n_interior < 3:
        raise InvalidMeshError(f"need at least 3 interior nodes, got {n_interior!r}")
    n = int(n_interior)
    h = 1.0 / (n + 1)
    coords = np.linspace(0.0, 1.0, n + 2)
    weights = np.full(n + 2, h)
    weights[0] = weights[-1] = h / 2.0
    is_dirichlet = np.zeros(n + 2, dtype=bool)
    is_dirichlet[0] = is_dirichlet[-1] = True
    free = np.arange(1, n + 1)
    return Mesh(
        kind="interval",
        n_interior=n,
        spacing=h,
        coords=_readonly(coords),
        weights=_readonly(weights),
        is_dirichlet=_readonly_bool(is_dirichlet),
        free=_readonly_int(free),
        cell_volume=_readonly(weights.copy()),
        edge_sigma=_readonly(np.ones(n + 1)),
        angular=1.0,
        dim=1,
        radius=None,
    )


def build_radial_mesh(n_interior: int, dim: int, radius: float) -> Mesh:
    """Uniform radial mesh on (0, R] for a ball in ``dim`` dimensions.

    The node at r = 0 is a free symmetry node (no inner flux); the node at
    r = R is the only Dirichlet node.  Nodal weights are exact cell volumes
    of the ball, so they sum to its measure to rounding.
    """
    if not isinstance(n_interior, (int, np.integer)) or n_interior < 3:
        raise InvalidMeshError(f"need at least 3 interior nodes, got {n_interior!r}")
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InvalidMeshError(f"dimension must be a positive integer, got {dim!r}")
    if not (radius > 0.0 and math.isfinite(radius)):
        raise InvalidMeshError(f"radius must be positive and finite, got {radius!r}")
    n = int(n_interior)
    N = int(dim)
    R = float(radius)
    h = R / (n + 1)
    coords = np.linspace(0.0, R, n + 2)
    # sphere surface measure: 2 pi^(N/2) / Gamma(N/2)
    angular = 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)
    inner = np.clip(coords - h / 2.0, 0.0, None)
    outer = np.minimum(coords + h / 2.0, R)
    cell_volume = (outer**N - inner**N) / N
    weights = angular * cell_volume
    is_dirichlet = np.zeros(n + 2, dtype=bool)
    is_dirichlet[-1] = True
    free = np.arange(0, n + 1)
    mids = 0.5 * (coords[:-1] + coords[1:])
    edge_sigma = mids ** (N - 1)
    return Mesh(
        kind="radial",
        n_interior=n,
        spacing=h,
        coords=_readonly(coords),
        weights=_readonly(weights),
        is_dirichlet=_readonly_bool(is_dirichlet),
        free=_readonly_int(free),
        cell_volume=_readonly(cell_volume),
        edge_sigma=_readonly(edge_sigma),
        angular=angular,
        dim=N,
        radius=R,
    )


def _readonly_bool(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=bool)
    out.setflags(write=False)
    return out


def _readonly_int(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.int64)
    out.setflags(write=False)
    return out


def distance_field(mesh: Mesh) -> GridFunction:
    """Nodal distance to the Dirichlet boundary.

    min(x, 1-x) on the interval, R - r on radial grids.  Vanishes exactly
    at Dirichlet nodes and is positive elsewhere.
    """
    x = mesh.coords
    if mesh.kind == "interval":
        d = np.minimum(x, 1.0 - x)
    else:
        d = mesh.radius - x
    d = d.copy()
    d[mesh.is_dirichlet] = 0.0
    return GridFunction(mesh, d, dirichlet=True)


def grid_function(mesh: Mesh, values: np.ndarray, dirichlet: bool = True) -> GridFunction:
    """Wrap nodal values; with ``dirichlet`` the boundary entries are zeroed."""
    vals = np.array(values, dtype=float)
    if vals.shape != (mesh.n_nodes,):
        raise ValueError(f"expected {mesh.n_nodes} nodal values, got shape {vals.shape}")
    if dirichlet:
        vals[mesh.is_dirichlet] = 0.0
    return GridFunction(mesh, vals, dirichlet=dirichlet)


def constant_function(mesh: Mesh, value: float) -> GridFunction:
    """Constant nodal data (not a Dirichlet function unless value is 0)."""
    return GridFunction(mesh, np.full(mesh.n_nodes, float(value)), dirichlet=(value == 0.0))


def zero_function(mesh: Mesh) -> GridFunction:
    return GridFunction(mesh, np.zeros(mesh.n_nodes), dirichlet=True)
