"""Shared fixtures: meshes, problem builders, and random load ensembles.

Module tests run on coarse meshes (n = 64..256) for speed; the pinned
resolutions (n = 512, 1024) live in test_acceptance.py.
"""

from __future__ import annotations

import numpy as np
import pytest

from plapcont import (
    ProblemSpec,
    SingularRHS,
    build_interval_mesh,
    distance_field,
    grid_function,
    make_nonlinearity,
    prepare_problem,
    zero_function,
)


@pytest.fixture(scope="session")
def mesh64():
    return build_interval_mesh(64)


@pytest.fixture(scope="session")
def mesh128():
    return build_interval_mesh(128)


@pytest.fixture(scope="session")
def mesh256():
    return build_interval_mesh(256)


def make_spec(mesh, family="d", p=2.0, h_values=None, **params):
    """Problem instance on ``mesh`` with zero (or given nodal) forcing."""
    if family == "d" and not params:
        params = {"alpha": 0.5, "q": 0.5}
    if family == "e" and not params:
        params = {"alpha": 0.5}
    if family == "c" and not params:
        params = {"a_coef": 1.0, "alpha": 0.5}
    f = make_nonlinearity(family, **params)
    if h_values is None:
        h = zero_function(mesh)
    else:
        h = grid_function(mesh, np.broadcast_to(h_values, (mesh.n_nodes,)).astype(float))
    return ProblemSpec(p=p, mesh=mesh, f=f, h=h)


@pytest.fixture(scope="session")
def prepared_d128(mesh128):
    spec = make_spec(mesh128, family="d")
    return spec, prepare_problem(spec)


@pytest.fixture(scope="session")
def prepared_d256(mesh256):
    spec = make_spec(mesh256, family="d")
    return spec, prepare_problem(spec)


def random_singular_loads(rng, mesh, count, c_bound, beta):
    """Loads |g| <= c_bound / d^beta: modulated, sign-definite, and extremal.

    Mirrors the ensemble the discrete a-priori constants were frozen
    against (extremal envelopes plus low-mode modulations).
    """
    d = distance_field(mesh).values
    x = mesh.coords / (mesh.coords[-1] if mesh.kind == "radial" else 1.0)
    fr = mesh.free
    base = np.zeros(mesh.n_nodes)
    base[fr] = c_bound * d[fr] ** (-beta)
    loads = [base.copy(), -base.copy()]
    while len(loads) < count:
        amp = np.zeros(mesh.n_nodes)
        for k in range(1, rng.integers(2, 7)):
            amp += rng.normal() / k * np.sin(np.pi * k * x)
        sup = float(np.max(np.abs(amp)))
        if sup < 1e-12:
            continue
        amp /= sup * rng.uniform(1.0, 2.0)
        loads.append(amp * base)
    return [SingularRHS.from_values(mesh, g, beta) for g in loads]


def random_smooth_profile(rng, mesh, modes=6):
    """Zero-boundary profile from a few random sine modes, sup-normalized."""
    x = mesh.coords / (mesh.coords[-1] if mesh.kind == "radial" else 1.0)
    vals = np.zeros(mesh.n_nodes)
    for k in range(1, modes + 1):
        vals += rng.normal() / k * np.sin(np.pi * k * x)
    sup = float(np.max(np.abs(vals)))
    if sup < 1e-12:
        vals[:] = np.sin(np.pi * x)
        sup = 1.0
    return grid_function(mesh, vals / sup)
