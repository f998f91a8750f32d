"""Mesh builders, quadrature weights, and the boundary-distance field."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plapcont import (
    InvalidMeshError,
    build_interval_mesh,
    build_radial_mesh,
    constant_function,
    distance_field,
    grid_function,
    zero_function,
)


class TestIntervalMesh:
    def test_three_interior_nodes_give_quarter_spacing(self):
        mesh = build_interval_mesh(3)
        assert mesh.spacing == pytest.approx(0.25, abs=0.0)
        np.testing.assert_allclose(mesh.coords, [0.0, 0.25, 0.5, 0.75, 1.0], atol=0.0)
        assert mesh.n_nodes == 5

    def test_large_mesh_spacing(self):
        mesh = build_interval_mesh(1023)
        assert mesh.spacing == pytest.approx(1.0 / 1024.0, rel=1e-15)
        assert mesh.n_nodes == 1025

    def test_too_few_nodes_rejected(self):
        with pytest.raises(InvalidMeshError):
            build_interval_mesh(2)
        with pytest.raises(InvalidMeshError):
            build_interval_mesh(0)

    def test_dirichlet_mask_marks_exactly_the_endpoints(self):
        mesh = build_interval_mesh(17)
        assert mesh.is_dirichlet[0] and mesh.is_dirichlet[-1]
        assert not mesh.is_dirichlet[1:-1].any()
        assert len(mesh.free) == 17

    def test_coords_strictly_increasing(self):
        mesh = build_interval_mesh(97)
        assert np.all(np.diff(mesh.coords) > 0.0)


class TestRadialMesh:
    def test_dim_one_matches_symmetric_interval(self):
        mesh = build_radial_mesh(64, dim=1, radius=1.0)
        # the symmetric segment (-R, R) has measure 2R; interior cells carry
        # twice the one-sided width (both mirror halves)
        assert np.sum(mesh.weights) == pytest.approx(2.0, rel=1e-12)
        interior = mesh.weights[1:-1]
        np.testing.assert_allclose(interior, 2.0 * mesh.spacing, rtol=1e-12)

    def test_dim_two_total_weight_is_disc_area(self):
        mesh = build_radial_mesh(1024, dim=2, radius=1.0)
        assert np.sum(mesh.weights) == pytest.approx(math.pi, rel=1e-6)

    def test_dim_three_total_weight_is_ball_volume(self):
        mesh = build_radial_mesh(200, dim=3, radius=1.0)
        assert np.sum(mesh.weights) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-12)

    def test_zero_radius_rejected(self):
        with pytest.raises((InvalidMeshError, ValueError)):
            build_radial_mesh(16, dim=2, radius=0.0)

    def test_scaled_radius_scales_measure(self):
        mesh = build_radial_mesh(64, dim=2, radius=3.0)
        assert np.sum(mesh.weights) == pytest.approx(math.pi * 9.0, rel=1e-10)


class TestWeights:
    @pytest.mark.parametrize("n", [3, 64, 255])
    def test_interval_weights_positive_and_sum_to_measure(self, n):
        mesh = build_interval_mesh(n)
        assert np.all(mesh.weights > 0.0)
        assert np.sum(mesh.weights) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_radial_weights_positive_and_sum_to_measure(self, dim):
        mesh = build_radial_mesh(80, dim=dim, radius=1.0)
        assert np.all(mesh.weights > 0.0)
        exact = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[dim]
        assert np.sum(mesh.weights) == pytest.approx(exact, rel=1e-12)

    @settings(max_examples=25, deadline=None, derandomize=True)
    @given(n=st.integers(min_value=3, max_value=400))
    def test_any_interval_mesh_partitions_the_unit_measure(self, n):
        mesh = build_interval_mesh(n)
        assert np.sum(mesh.weights) == pytest.approx(1.0, rel=1e-12)
        assert np.all(np.diff(mesh.coords) > 0.0)


class TestDistanceField:
    def test_interval_values(self):
        mesh = build_interval_mesh(3)
        d = distance_field(mesh)
        assert d.values[1] == pytest.approx(0.25, abs=0.0)  # x = 0.25
        assert d.values[2] == pytest.approx(0.5, abs=0.0)  # x = 0.5

    def test_radial_value_near_rim(self):
        mesh = build_radial_mesh(9, dim=2, radius=1.0)
        d = distance_field(mesh)
        idx = int(np.argmin(np.abs(mesh.coords - 0.9)))
        assert mesh.coords[idx] == pytest.approx(0.9, abs=1e-12)
        assert d.values[idx] == pytest.approx(0.1, abs=1e-12)

    @pytest.mark.parametrize(
        "mesh_builder",
        [
            lambda: build_interval_mesh(50),
            lambda: build_radial_mesh(50, dim=2, radius=1.0),
        ],
    )
    def test_zero_exactly_on_dirichlet_positive_inside(self, mesh_builder):
        mesh = mesh_builder()
        d = distance_field(mesh)
        assert np.all(d.values[mesh.is_dirichlet] == 0.0)
        assert np.all(d.values[mesh.free] > 0.0)

    @pytest.mark.parametrize(
        "mesh_builder",
        [
            lambda: build_interval_mesh(64),
            lambda: build_interval_mesh(65),
            lambda: build_radial_mesh(64, dim=3, radius=2.0),
        ],
    )
    def test_one_lipschitz_along_the_grid(self, mesh_builder):
        mesh = mesh_builder()
        d = distance_field(mesh)
        steps = np.abs(np.diff(d.values))
        assert np.all(steps <= mesh.spacing * (1.0 + 1e-12))


class TestGridFunction:
    def test_sup_norm_and_interior(self):
        mesh = build_interval_mesh(3)
        u = grid_function(mesh, [0.0, -2.0, 1.0, 0.5, 0.0])
        assert u.sup_norm == 2.0
        np.testing.assert_allclose(u.interior(), [-2.0, 1.0, 0.5])

    def test_wrong_length_rejected(self):
        mesh = build_interval_mesh(3)
        with pytest.raises(ValueError):
            grid_function(mesh, [1.0, 2.0])

    def test_constant_and_zero_helpers(self):
        mesh = build_interval_mesh(8)
        z = zero_function(mesh)
        c = constant_function(mesh, 3.5)
        assert z.sup_norm == 0.0
        assert c.values[mesh.free].min() == 3.5
        # constants model forcing data, so the boundary values are kept
        assert c.values[0] == 3.5 and not c.dirichlet
