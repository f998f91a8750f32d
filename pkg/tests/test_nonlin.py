"""Reaction families: evaluation oracle, parameter ranges, growth certificates."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plapcont import (
    DomainError,
    Nonlinearity,
    eval_f,
    f_prime,
    make_nonlinearity,
    validate_assumptions,
)


class TestEval:
    def test_pure_singular_family_values(self):
        f = make_nonlinearity("e", alpha=0.5)
        assert eval_f(f, 4.0) == pytest.approx(0.5, rel=1e-15)
        assert eval_f(f, 1.0) == 1.0

    def test_shifted_singular_family_crosses_zero_at_one(self):
        f = make_nonlinearity("c", a_coef=1.0, alpha=0.5)
        assert eval_f(f, 1.0) == 0.0
        assert eval_f(f, 4.0) == pytest.approx(0.5, rel=1e-15)

    def test_log_family_crosses_zero_at_one(self):
        f = make_nonlinearity("f")
        assert eval_f(f, 1.0) == 0.0
        assert eval_f(f, math.e) == pytest.approx(1.0, rel=1e-15)

    def test_mixed_families(self):
        fa = make_nonlinearity("a", q=2.0, beta=0.5)
        assert eval_f(fa, 4.0) == pytest.approx(16.0 - 0.5, rel=1e-15)
        fd = make_nonlinearity("d", alpha=0.5, q=0.5)
        assert eval_f(fd, 4.0) == pytest.approx(2.5, rel=1e-15)
        fb = make_nonlinearity("b", beta=0.25, alpha=0.75)
        assert eval_f(fb, 16.0) == pytest.approx(0.5 - 0.125, rel=1e-15)

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
    def test_nonpositive_arguments_rejected(self, bad):
        f = make_nonlinearity("e", alpha=0.5)
        with pytest.raises(DomainError):
            eval_f(f, bad)
        with pytest.raises(DomainError):
            eval_f(f, np.array([1.0, bad]))

    def test_vector_evaluation_matches_scalar(self):
        f = make_nonlinearity("d", alpha=0.3, q=1.2)
        s = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(eval_f(f, s), [eval_f(f, v) for v in s], rtol=1e-15)

    @settings(max_examples=40, deadline=None, derandomize=True)
    @given(s=st.floats(1e-6, 1e6))
    def test_derivative_matches_finite_difference(self, s):
        f = make_nonlinearity("d", alpha=0.5, q=0.5)
        step = 1e-6 * s
        numeric = (eval_f(f, s + step) - eval_f(f, s - step)) / (2.0 * step)
        assert f_prime(f, s) == pytest.approx(numeric, rel=1e-5)


class TestConstruction:
    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            make_nonlinearity("z", alpha=0.5)

    def test_extra_parameters_rejected(self):
        with pytest.raises(ValueError):
            make_nonlinearity("e", alpha=0.5, q=1.0)

    def test_missing_parameters_rejected(self):
        with pytest.raises(ValueError):
            make_nonlinearity("b", beta=0.5)

    @pytest.mark.parametrize(
        "family, params",
        [
            ("b", {"beta": 0.75, "alpha": 0.25}),  # needs beta < alpha
            ("b", {"beta": 0.5, "alpha": 1.5}),
            ("c", {"a_coef": -1.0, "alpha": 0.5}),
            ("c", {"a_coef": 1.0, "alpha": 1.0}),
            ("d", {"alpha": 1.2, "q": 0.5}),
            ("e", {"alpha": 0.0}),
            ("a", {"q": -1.0, "beta": 0.5}),
        ],
    )
    def test_out_of_range_parameters_rejected(self, family, params):
        with pytest.raises(ValueError):
            make_nonlinearity(family, **params)

    def test_custom_needs_direct_construction(self):
        with pytest.raises(ValueError):
            make_nonlinearity("custom")
        custom = Nonlinearity(family="custom", params={}, fn=lambda s: s**-0.25)
        assert eval_f(custom, 16.0) == pytest.approx(0.5, rel=1e-12)


class TestValidation:
    @pytest.mark.parametrize(
        "family, params, beta_expected",
        [
            ("e", {"alpha": 0.5}, 0.5),
            ("d", {"alpha": 0.5, "q": 0.5}, 0.5),
            ("b", {"beta": 0.25, "alpha": 0.75}, 0.75),
            ("c", {"a_coef": 1.0, "alpha": 0.5}, 0.5),
        ],
    )
    def test_conforming_families_pass_with_fitted_exponent(self, family, params, beta_expected):
        rep = validate_assumptions(make_nonlinearity(family, **params), 2.0)
        assert rep.passed
        assert all(rep.checks.values())
        assert rep.witness == {}
        # the singular exponent is fitted numerically from deep log-log
        # samples; subdominant terms perturb it at the sub-percent level
        assert rep.beta == pytest.approx(beta_expected, rel=1e-2)
        assert 0.0 < rep.beta < 1.0
        assert rep.a_const > 0.0 and rep.b_const > 0.0 and rep.c_small > 0.0

    def test_superlinear_growth_fails_with_witness(self):
        rep = validate_assumptions(make_nonlinearity("a", q=3.0, beta=0.5), 2.0)
        assert not rep.passed
        assert not rep.checks["f1_sublinear"]
        assert "f1_sublinear" in rep.witness and rep.witness["f1_sublinear"] > 0.0

    def test_too_singular_exponent_fails_with_witness(self):
        rep = validate_assumptions(make_nonlinearity("a", q=0.5, beta=1.2), 2.0)
        assert not rep.passed
        assert rep.witness  # at least one witnessing argument recorded

    def test_growth_check_depends_on_p(self):
        f = make_nonlinearity("a", q=1.5, beta=0.5)
        assert not validate_assumptions(f, 2.0).passed  # needs q < p - 1 = 1
        assert validate_assumptions(f, 3.0).passed  # q < p - 1 = 2

    @pytest.mark.parametrize(
        "family, params",
        [
            ("e", {"alpha": 0.5}),
            ("d", {"alpha": 0.5, "q": 0.5}),
            ("c", {"a_coef": 1.0, "alpha": 0.5}),
            ("b", {"beta": 0.25, "alpha": 0.75}),
        ],
    )
    def test_certified_envelopes_hold_between_sample_points(self, family, params):
        f = make_nonlinearity(family, **params)
        rep = validate_assumptions(f, 2.0)
        assert rep.passed
        rng = np.random.default_rng(99)
        # positivity beyond the onset argument
        s_hi = np.exp(rng.uniform(np.log(rep.a_onset * 1.05), np.log(1e7), 4000))
        vals = eval_f(f, s_hi)
        assert np.all(vals * s_hi**rep.beta >= rep.a_const * (1.0 - 1e-9))
        # one-sided singular lower envelope on the whole domain
        s_all = np.exp(rng.uniform(np.log(1e-8), np.log(1e7), 4000))
        vals = eval_f(f, s_all)
        assert np.all(vals * s_all**rep.beta > -rep.b_const * (1.0 + 1e-9))

    def test_split_certificate_for_given_growth_budget(self):
        f = make_nonlinearity("d", alpha=0.5, q=0.5)
        rep = validate_assumptions(f, 2.0)
        eps_bar = 0.01
        a1, c_split = rep.split_for(eps_bar)
        assert a1 > 0.0 and c_split > 0.0
        small = np.geomspace(1e-8, a1, 2000)
        large = np.geomspace(a1, 1e9, 2000)
        assert np.all(np.abs(eval_f(f, small)) <= c_split * small**-rep.beta * (1.0 + 1e-12))
        assert np.all(np.abs(eval_f(f, large)) <= eps_bar * large ** (2.0 - 1.0) * (1.0 + 1e-12))
