"""Branch tracing, connectedness proxy, threshold bisection, monotonicity."""

from __future__ import annotations

import json

import numpy as np
import pytest

from plapcont import (
    FixedPointOptions,
    ThresholdPreconditionError,
    calibration,
    check_connectedness,
    exploratory_solve,
    find_threshold,
    solve_fixed_point,
    trace_branch,
    trace_branch_parallel,
)
from plapcont.continuum import (
    branch_to_csv,
    branch_to_json,
    solvability_monotonicity,
)
from plapcont.fixedpoint import context_for
from conftest import make_spec


@pytest.fixture(scope="module")
def branch_d256(prepared_d256):
    spec, prepared = prepared_d256
    ls = prepared.pack.lambda_star
    grid = np.geomspace(ls, 10.0 * ls, 12)
    branch = trace_branch(spec, grid, prepared=prepared)
    return spec, prepared, branch


class TestTraceBranch:
    def test_empty_grid_rejected(self, prepared_d128):
        spec, prepared = prepared_d128
        with pytest.raises(ValueError):
            trace_branch(spec, [], prepared=prepared)

    def test_non_increasing_grid_rejected(self, prepared_d128):
        spec, prepared = prepared_d128
        ls = prepared.pack.lambda_star
        with pytest.raises(ValueError):
            trace_branch(spec, [2.0 * ls, 2.0 * ls], prepared=prepared)
        with pytest.raises(ValueError):
            trace_branch(spec, [3.0 * ls, 2.0 * ls], prepared=prepared)

    def test_grid_below_onset_rejected(self, prepared_d128):
        spec, prepared = prepared_d128
        ls = prepared.pack.lambda_star
        with pytest.raises(ValueError):
            trace_branch(spec, [0.1 * ls, 2.0 * ls], prepared=prepared)

    def test_singleton_grid_matches_direct_solve(self, prepared_d128):
        spec, prepared = prepared_d128
        pack = prepared.pack
        ls = pack.lambda_star
        branch = trace_branch(spec, [ls], prepared=prepared)
        assert len(branch.points) == 1
        pt = branch.points[0]
        assert pt.converged and pt.lam == ls
        upper = prepared.upper_for(ls * (1.0 + 1e-9))
        ctx = context_for(ls, pack, upper, spec.f, prepared.report.beta)
        direct = solve_fixed_point(ls, ctx, spec.h, spec.p)
        assert np.max(np.abs(pt.u.values - direct.u_star.values)) <= 1e-10

    def test_reference_branch_is_clean_and_monotone(self, branch_d256):
        _, _, branch = branch_d256
        assert all(pt.converged for pt in branch.points)
        assert all(pt.in_sandwich for pt in branch.points)
        assert not branch.failures
        lams = [pt.lam for pt in branch.points]
        assert all(b > a for a, b in zip(lams[:-1], lams[1:]))
        sups = [pt.sup_norm for pt in branch.points]
        assert all(b >= a for a, b in zip(sups[:-1], sups[1:]))

    def test_residuals_meet_the_tolerance(self, branch_d256, prepared_d256):
        spec, prepared, branch = (*prepared_d256, branch_d256[2])
        opts = FixedPointOptions()
        for pt in branch.points:
            assert pt.residual <= opts.tol

    def test_points_stay_below_the_global_ceiling(self, branch_d256):
        spec, prepared, branch = branch_d256
        upper = prepared.upper_for(branch.lam_max)
        cap = float(np.max(upper.u_upper.values))
        slack = FixedPointOptions().slack_factor * FixedPointOptions().tol
        for pt in branch.points:
            assert pt.sup_norm <= cap + slack

    def test_warm_and_cold_traces_agree(self, prepared_d128):
        spec, prepared = prepared_d128
        ls = prepared.pack.lambda_star
        grid = np.geomspace(ls, 5.0 * ls, 6)
        opts = FixedPointOptions()
        warm = trace_branch(spec, grid, warm_start=True, prepared=prepared, fp_opts=opts)
        cold = trace_branch(spec, grid, warm_start=False, prepared=prepared, fp_opts=opts)
        for a, b in zip(warm.points, cold.points):
            assert np.max(np.abs(a.u.values - b.u.values)) <= 100.0 * opts.tol

    def test_parallel_trace_matches_cold_sequential(self, prepared_d128):
        spec, prepared = prepared_d128
        ls = prepared.pack.lambda_star
        grid = np.geomspace(ls, 4.0 * ls, 4)
        opts = FixedPointOptions()
        seq = trace_branch(spec, grid, warm_start=False, prepared=prepared, fp_opts=opts)
        par = trace_branch_parallel(spec, grid, jobs=2, prepared=prepared, fp_opts=opts)
        for a, b in zip(seq.points, par.points):
            assert a.converged == b.converged
            assert np.max(np.abs(a.u.values - b.u.values)) <= 100.0 * opts.tol

    def test_starved_iteration_returns_partial_branch_with_failures(self, prepared_d128):
        spec, prepared = prepared_d128
        ls = prepared.pack.lambda_star
        grid = np.geomspace(ls, 10.0 * ls, 5)
        opts = FixedPointOptions(tol=1e-13, max_picard=2, max_newton=0)
        branch = trace_branch(spec, grid, prepared=prepared, fp_opts=opts)
        assert len(branch.failures) > 0
        assert any(not pt.converged for pt in branch.points) or len(branch.points) < 5

    def test_extension_traces_are_consistent(self, prepared_d256):
        spec, prepared = prepared_d256
        ls = prepared.pack.lambda_star
        inner = np.geomspace(ls, 2.0 * ls, 6)
        outer = np.concatenate([inner, np.geomspace(3.0 * ls, 10.0 * ls, 5)])
        opts = FixedPointOptions()
        short = trace_branch(spec, inner, prepared=prepared, fp_opts=opts)
        long = trace_branch(spec, outer, prepared=prepared, fp_opts=opts)
        for a, b in zip(short.points, long.points[:6]):
            assert a.lam == b.lam
            assert np.max(np.abs(a.u.values - b.u.values)) <= 100.0 * opts.tol


class TestConnectedness:
    def test_single_point_passes_vacuously(self, prepared_d128):
        spec, prepared = prepared_d128
        ls = prepared.pack.lambda_star
        branch = trace_branch(spec, [ls], prepared=prepared)
        rep = check_connectedness(branch, calibration.GAP_TOL)
        assert rep.passed and rep.largest_gap == 0.0 and rep.worst_pair is None

    def test_dense_reference_branch_passes_the_frozen_tolerance(self, branch_d256):
        _, _, branch = branch_d256
        rep = check_connectedness(branch, calibration.GAP_TOL)
        assert rep.passed
        assert rep.largest_gap <= calibration.GAP_TOL

    def test_deleting_interior_points_breaks_the_proxy(self, branch_d256):
        _, _, branch = branch_d256
        from plapcont.continuum import Branch

        thinned = Branch(
            points=(branch.points[0], branch.points[-1]),
            lambda_star=branch.lambda_star,
            lam_max=branch.lam_max,
            failures=(),
        )
        rep = check_connectedness(thinned, calibration.GAP_TOL)
        assert not rep.passed
        assert rep.worst_pair == (branch.points[0].lam, branch.points[-1].lam)


class TestExploratory:
    def test_shifted_family_unsolvable_far_below_threshold(self, mesh128):
        spec = make_spec(mesh128, family="c")
        res = exploratory_solve(spec, 1.0)
        assert not res.converged

    def test_shifted_family_solvable_above_threshold(self, mesh128):
        spec = make_spec(mesh128, family="c")
        res = exploratory_solve(spec, 200.0)
        assert res.converged
        assert res.u.sup_norm > 0.0
        assert np.all(res.u.values[mesh128.free] > 0.0)

    def test_singular_family_solvable_below_the_barrier_onset(self, prepared_d128):
        spec, prepared = prepared_d128
        ls = prepared.pack.lambda_star
        res = exploratory_solve(spec, 0.5 * ls)
        assert res.converged


class TestThreshold:
    def test_reversed_bracket_rejected(self, mesh128):
        spec = make_spec(mesh128, family="c")
        with pytest.raises(ValueError):
            find_threshold(spec, 100.0, 1.0)
        with pytest.raises(ValueError):
            find_threshold(spec, -1.0, 10.0)

    def test_unsolvable_upper_endpoint_reported(self, mesh128):
        spec = make_spec(mesh128, family="c")
        with pytest.raises(ThresholdPreconditionError) as err:
            find_threshold(spec, 0.01, 1.0)
        assert err.value.reason == "upper_endpoint_unsolvable"

    def test_everywhere_solvable_family_has_no_dichotomy(self, mesh128):
        spec = make_spec(mesh128, family="e")
        with pytest.raises(ThresholdPreconditionError) as err:
            find_threshold(spec, 1e-3, 10.0)
        assert err.value.reason == "no_dichotomy"

    def test_frozen_bracket_for_the_shifted_family(self):
        from plapcont import build_interval_mesh

        mesh = build_interval_mesh(512)
        spec = make_spec(mesh, family="c")
        trials = []
        est = find_threshold(spec, 0.01, 100.0, trials=trials)
        assert est.lambda0_lo == calibration.ANCHORS["family_c_lambda0_lo_p2_n512"]
        assert est.lambda0_hi == calibration.ANCHORS["family_c_lambda0_hi_p2_n512"]
        assert est.width <= 0.01 * est.lambda0_hi
        assert trials, "bisection trials should be recorded"
        lams = [t["lambda"] for t in trials]
        flags = [t["solvable"] for t in trials]
        assert len(lams) == len(flags)

    def test_grid_independence_of_the_bracket(self, mesh256):
        spec = make_spec(mesh256, family="c")
        est = find_threshold(spec, 0.01, 100.0)
        # the probe sequence is grid-free, so a coarser mesh lands on the
        # same dyadic bracket
        assert est.lambda0_lo == calibration.ANCHORS["family_c_lambda0_lo_p2_n512"]
        assert est.lambda0_hi == calibration.ANCHORS["family_c_lambda0_hi_p2_n512"]


class TestMonotonicity:
    def test_shifted_family_has_a_single_transition(self, mesh128):
        spec = make_spec(mesh128, family="c")
        rep = solvability_monotonicity(spec, [10.0, 50.0, 120.0, 200.0])
        assert rep.flags == (False, False, True, True)
        assert rep.monotone
        assert rep.first_solvable == 120.0

    def test_window_above_onset_is_fully_solvable(self, prepared_d128):
        spec, prepared = prepared_d128
        ls = prepared.pack.lambda_star
        rep = solvability_monotonicity(spec, [ls, 2.0 * ls, 5.0 * ls], prepared=prepared)
        assert rep.flags == (True, True, True)
        assert rep.monotone and rep.first_solvable == ls

    def test_empty_probe_list_passes_vacuously(self, prepared_d128):
        spec, prepared = prepared_d128
        rep = solvability_monotonicity(spec, [], prepared=prepared)
        assert rep.flags == ()
        assert rep.monotone
        assert rep.first_solvable is None


class TestSerialization:
    def test_csv_round_trips_at_full_precision(self, branch_d256):
        _, _, branch = branch_d256
        text = branch_to_csv(branch)
        lines = text.strip().splitlines()
        header = lines[0].split(",")
        assert "lambda" in header and "sup_norm" in header
        assert len(lines) == 1 + len(branch.points)
        first = dict(zip(header, lines[1].split(",")))
        assert float(first["lambda"]) == branch.points[0].lam
        assert float(first["sup_norm"]) == branch.points[0].sup_norm

    def test_json_document_carries_constants_and_meta(self, branch_d256):
        _, _, branch = branch_d256
        doc = json.loads(branch_to_json(branch, {"gap_tol": calibration.GAP_TOL},
                                        {"mode": "test"}))
        assert doc["constants"]["gap_tol"] == calibration.GAP_TOL
        assert doc["meta"]["mode"] == "test"
        assert len(doc["points"]) == len(branch.points)
        assert doc["lambda_star"] == branch.lambda_star
