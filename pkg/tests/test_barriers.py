"""Sub/supersolution machinery: auxiliary profiles, constants, margin checks."""

from __future__ import annotations

import math

import numpy as np
import pytest

from plapcont import (
    BarrierConstructionError,
    build_barrier_pack,
    build_psi,
    constant_function,
    first_eigenpair,
    grid_function,
    lower_constants,
    lower_solution,
    make_nonlinearity,
    solve_singular_phi,
    upper_constants,
    validate_assumptions,
    verify_subsolution,
    verify_supersolution,
    zero_function,
)
from plapcont.nonlin import AssumptionReport


def synthetic_report(p=2.0, beta=0.5, a_const=1.0, a_onset=1e-3, b_const=1.0):
    f = make_nonlinearity("e", alpha=beta)
    return AssumptionReport(
        spec=f, p=p, beta=beta, a_const=a_const, a_onset=a_onset,
        b_const=b_const, c_small=1.0, checks={}, witness={}, eps_bar_table={},
    )


@pytest.fixture(scope="module")
def pack_d128(prepared_d128):
    spec, prepared = prepared_d128
    return spec, prepared.build


class TestSingularProfile:
    @pytest.mark.parametrize("p", [2.0, 3.0])
    @pytest.mark.parametrize("m", [0.1, 10.0])
    def test_mass_rescaling_identity(self, p, m, mesh128):
        beta = 0.5
        phi_1 = solve_singular_phi(1.0, beta, p, mesh128)
        phi_m = solve_singular_phi(m, beta, p, mesh128)
        predicted = m ** (1.0 / (p - 1.0 + beta)) * phi_1.values
        assert np.max(np.abs(phi_m.values - predicted)) <= 1e-6

    def test_profile_shrinks_with_the_mass(self, mesh128):
        sups = [solve_singular_phi(m, 0.5, 2.0, mesh128).sup_norm for m in (1.0, 0.1, 0.01)]
        assert sups[0] > sups[1] > sups[2] > 0.0

    def test_profile_dominates_a_multiple_of_the_ground_state(self, mesh128):
        phi = solve_singular_phi(1.0, 0.5, 2.0, mesh128)
        pair = first_eigenpair(2.0, mesh128)
        fr = mesh128.free
        eps_m = float(np.min(phi.values[fr] / pair.phi1.values[fr]))
        assert eps_m > 0.0
        assert np.all(phi.values[fr] >= eps_m * pair.phi1.values[fr])

    def test_profile_positive_with_zero_trace(self, mesh128):
        phi = solve_singular_phi(0.5, 0.3, 2.0, mesh128)
        assert np.all(phi.values[mesh128.free] > 0.0)
        assert phi.values[0] == 0.0 and phi.values[-1] == 0.0


class TestLowerConstants:
    def test_exponent_for_quadratic_case(self):
        lc = lower_constants(synthetic_report(p=2.0, beta=0.5), 2.0, c1=1.0, eps_cut=0.25)
        assert lc.r == pytest.approx(2.0 / 3.0, rel=1e-14)

    def test_unit_positivity_constant_gives_unit_delta(self):
        lc = lower_constants(synthetic_report(a_const=1.0), 2.0, c1=1.0, eps_cut=0.25)
        assert lc.delta == pytest.approx(1.0, rel=1e-14)

    def test_gamma_for_unit_constants(self):
        lc = lower_constants(
            synthetic_report(a_const=1.0, b_const=1.0, beta=0.5), 2.0, c1=1.0, eps_cut=0.25
        )
        assert lc.delta == pytest.approx(1.0, rel=1e-14)
        assert lc.gamma == pytest.approx(math.sqrt(2.0), rel=1e-14)

    def test_onset_formula(self):
        rep = synthetic_report(a_onset=1e-3)
        lc = lower_constants(rep, 2.0, c1=0.5, eps_cut=0.25)
        expected = (2.0 * rep.a_onset / (0.5 * 0.25 * lc.delta)) ** (1.0 / lc.r)
        assert lc.lambda_star == pytest.approx(expected, rel=1e-12)


class TestPsi:
    def test_flattened_profile_sandwiched_by_the_original(self, pack_d128):
        _, build = pack_d128
        pack = build.pack
        scale = pack.delta ** (1.0 / (2.0 - 1.0))
        fr = pack.phi.mesh.free
        lo = 0.5 * scale * pack.phi.values[fr]
        hi = scale * pack.phi.values[fr]
        assert np.all(pack.psi.values[fr] >= lo)
        assert np.min(pack.psi.values[fr] - lo) > 0.0
        assert np.all(pack.psi.values[fr] <= hi * (1.0 + 1e-12))

    def test_oversized_flat_region_rejected(self, pack_d128, mesh128):
        _, build = pack_d128
        pack = build.pack
        with pytest.raises(BarrierConstructionError):
            build_psi(pack.delta, pack.gamma, 0.5, 0.4, pack.phi, 2.0)


class TestLowerSolution:
    def test_below_onset_rejected(self, pack_d128):
        _, build = pack_d128
        with pytest.raises(ValueError):
            lower_solution(0.5 * build.pack.lambda_star, build.pack)

    def test_doubling_lambda_scales_by_two_to_the_r(self, pack_d128):
        _, build = pack_d128
        pack = build.pack
        lam = 3.0 * pack.lambda_star
        u1 = lower_solution(lam, pack)
        u2 = lower_solution(2.0 * lam, pack)
        np.testing.assert_allclose(u2.values, 2.0**pack.r * u1.values, rtol=1e-13)

    def test_monotone_in_lambda(self, pack_d128):
        _, build = pack_d128
        pack = build.pack
        lams = pack.lambda_star * np.array([1.0, 2.0, 5.0, 10.0])
        sols = [lower_solution(lam, pack) for lam in lams]
        for a, b in zip(sols[:-1], sols[1:]):
            assert np.all(b.values >= a.values)

    def test_exceeds_positivity_onset_away_from_boundary(self, prepared_d128):
        spec, prepared = prepared_d128
        pack, report = prepared.pack, prepared.report
        d = np.minimum(spec.mesh.coords, 1.0 - spec.mesh.coords)
        inner = d > pack.eps_cut
        for lam in (pack.lambda_star, 2.0 * pack.lambda_star):
            u_low = lower_solution(lam, pack)
            assert np.all(u_low.values[inner] > report.a_onset)


class TestMarginChecks:
    @pytest.mark.parametrize("factor", [1.0, 2.0, 10.0])
    def test_lower_barrier_is_a_subsolution(self, prepared_d128, factor):
        spec, prepared = prepared_d128
        pack = prepared.pack
        lam = factor * pack.lambda_star
        rep = verify_subsolution(lower_solution(lam, pack), lam, spec.f, spec.h, spec.p)
        assert rep.passed
        assert rep.worst_margin >= -1e-7

    @pytest.mark.parametrize("factor", [1.0, 4.0])
    def test_upper_barrier_is_a_supersolution(self, prepared_d128, factor):
        spec, prepared = prepared_d128
        pack = prepared.pack
        lam_max = 4.0 * pack.lambda_star
        upper = prepared.upper_for(lam_max)
        lam = factor * pack.lambda_star
        rep = verify_supersolution(upper.u_upper, lam, spec.f, spec.h, spec.p)
        assert rep.passed

    def test_roles_reversed_fail(self, prepared_d128):
        spec, prepared = prepared_d128
        pack = prepared.pack
        lam = 10.0 * pack.lambda_star
        upper = prepared.upper_for(lam)
        # the ceiling is no subsolution, the floor no supersolution
        assert not verify_subsolution(upper.u_upper, lam, spec.f, spec.h, spec.p).passed
        assert not verify_supersolution(
            lower_solution(lam, pack), lam, spec.f, spec.h, spec.p
        ).passed

    def test_stale_ceiling_fails_until_refreshed(self, prepared_d128, mesh128):
        spec, prepared = prepared_d128
        pack = prepared.pack
        lam = 2.0 * pack.lambda_star
        h_big = constant_function(mesh128, 50.0)
        stale = prepared.upper_for(4.0 * pack.lambda_star)  # built for h = 0
        assert not verify_supersolution(stale.u_upper, lam, spec.f, h_big, spec.p).passed
        refreshed = upper_constants(
            4.0 * pack.lambda_star, prepared.report, 50.0, pack.phi, spec.p,
            pack.delta, pack.r,
        )
        assert verify_supersolution(refreshed.u_upper, lam, spec.f, h_big, spec.p).passed

    def test_tiny_ground_state_multiple_is_a_subsolution_of_the_singular_family(
        self, mesh128
    ):
        f = make_nonlinearity("d", alpha=0.5, q=0.5)
        pair = first_eigenpair(2.0, mesh128)
        tiny = grid_function(mesh128, 1e-6 * pair.phi1.values)
        rep = verify_subsolution(tiny, 1.0, f, zero_function(mesh128), 2.0)
        assert rep.passed


class TestUpperConstants:
    def test_zero_forcing_drops_the_third_term(self, prepared_d128):
        spec, prepared = prepared_d128
        pack = prepared.pack
        lam_max = 4.0 * pack.lambda_star
        up = prepared.upper_for(lam_max)
        m1 = lam_max**pack.r * pack.delta ** (1.0 / (spec.p - 1.0))
        m2 = (4.0 * lam_max * up.c_split) ** (1.0 / (spec.p + prepared.report.beta - 1.0))
        assert up.m_const == pytest.approx(max(m1, m2), rel=1e-13)

    def test_forcing_term_enters_the_ceiling(self, prepared_d128):
        spec, prepared = prepared_d128
        pack = prepared.pack
        lam_max = 4.0 * pack.lambda_star
        h_sup = 1e6
        up = upper_constants(
            lam_max, prepared.report, h_sup, pack.phi, spec.p, pack.delta, pack.r
        )
        m3 = (4.0 * h_sup * pack.phi.sup_norm**prepared.report.beta) ** (1.0 / (spec.p - 1.0))
        assert up.m_const == pytest.approx(m3, rel=1e-13)

    def test_admissible_slope_budget_identity(self, prepared_d128):
        spec, prepared = prepared_d128
        pack = prepared.pack
        lam_max = 4.0 * pack.lambda_star
        up = prepared.upper_for(lam_max)
        beta = prepared.report.beta
        product = lam_max * up.eps_bar * pack.phi.sup_norm ** (spec.p - 1.0 + beta)
        assert product == pytest.approx(0.125, rel=1e-12)
        assert product < 0.25

    @pytest.mark.parametrize("factor", [1.0, 2.0, 4.0])
    def test_barriers_stay_ordered_across_the_window(self, prepared_d128, factor):
        spec, prepared = prepared_d128
        pack = prepared.pack
        lam_max = 4.0 * pack.lambda_star
        upper = prepared.upper_for(lam_max)
        lam = factor * pack.lambda_star
        u_low = lower_solution(lam, pack)
        assert np.all(u_low.values <= upper.u_upper.values + 1e-12)


class TestBarrierBuild:
    def test_pack_wiring(self, prepared_d128):
        _, prepared = prepared_d128
        build = prepared.build
        pack = build.pack
        assert pack.eps_cut <= build.eps0 / 2.0 + 1e-15
        assert pack.eps_m > 0.0
        assert pack.lambda_star > 0.0
        assert build.c1_phi > 0.0 and build.c2_phi >= build.c1_phi

    def test_rejects_nonconforming_reaction(self, mesh128):
        f = make_nonlinearity("a", q=3.0, beta=0.5)  # superlinear at p = 2
        with pytest.raises(BarrierConstructionError):
            build_barrier_pack(mesh128, 2.0, f)
