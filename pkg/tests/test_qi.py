import math

import numpy as np
import pytest

from bobbm.qi import (
    ExponentSchedule,
    QiKernel,
    VARIANTS,
    admissible_params,
    exponent_recursion,
    exponent_schedule,
    integrability_exponent,
    oscillation_factor,
    qi_gamma_restricted,
    qi_halfcase_ratio,
    qi_scaling_fit,
    qi_second_moment_exact,
    qi_second_moment_mc,
)
from bobbm.rng import Stream
from bobbm.spectral import FourierField
from bobbm.trilinear import q_split, q_full

from _oracles import wick_second_moment
from conftest import gaussian_fields


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("N", [1, 3, 6])
@pytest.mark.parametrize("t", [0.1, 1.0])
def test_exact_matches_wick_oracle(variant, N, t):
    s = 0.35
    ref = wick_second_moment(variant, s, N, t)
    got = qi_second_moment_exact(QiKernel(variant, s, N), t)
    assert got == pytest.approx(ref, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("t", [0.1, 0.7, 2.0])
def test_closed_form_small_case(t):
    got = qi_second_moment_exact(QiKernel("Q1_SYM", 0.5, 2), t)
    assert got == pytest.approx(72 * (1 - math.cos(t / 3)), rel=1e-13)


def test_zero_time_and_evenness():
    k = QiKernel("FULL", 0.4, 10)
    assert qi_second_moment_exact(k, 0.0) == 0.0
    for t in (0.2, 1.3):
        assert qi_second_moment_exact(k, -t) == pytest.approx(qi_second_moment_exact(k, t), rel=1e-14)


def test_small_time_limit():
    k = QiKernel("FULL", 0.4, 12)
    tiny = 1e-5
    ref = qi_second_moment_exact(k, 1e-3) / 1e-6
    assert qi_second_moment_exact(k, tiny) / tiny**2 == pytest.approx(ref, rel=1e-5)
    np.testing.assert_allclose(oscillation_factor(0.3, np.array([0.0])), [0.09])


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_cauchy_inequality(s):
    for N in (8, 32):
        full = qi_second_moment_exact(QiKernel("FULL", s, N), 0.4)
        q1 = qi_second_moment_exact(QiKernel("Q1_SYM", s, N), 0.4)
        q2 = qi_second_moment_exact(QiKernel("Q2_SYM", s, N), 0.4)
        assert full <= 2 * q1 + 2 * q2


def test_kernel_validation():
    with pytest.raises(ValueError):
        QiKernel("Q3", 0.5, 4)
    with pytest.raises(ValueError):
        QiKernel("FULL", 0.5, 0)
    with pytest.raises(ValueError):
        qi_second_moment_exact(QiKernel("FULL", 0.5, 4), math.inf)


def test_kernel_is_symmetric():
    k = QiKernel("Q2_SYM", 0.3, 9)
    a, b, c = np.array([3]), np.array([-7]), np.array([4])
    for perm in [(a, b, c), (b, a, c), (c, b, a), (b, c, a)]:
        np.testing.assert_allclose(k.values(*perm), k.values(a, b, c), rtol=1e-15)


def test_kernel_forms_match_trilinear_forms():
    s, N = 0.6, 10
    for u in gaussian_fields(s, N, 3, seed=2):
        q1, q2 = q_split(u, s, N)
        assert QiKernel("Q1_SYM", s, N).form(u.coeffs) == pytest.approx(q1, rel=1e-12)
        assert QiKernel("Q2_SYM", s, N).form(u.coeffs) == pytest.approx(q2, rel=1e-12)
        assert QiKernel("FULL", s, N).form(u.coeffs) == pytest.approx(q_full(u, s, N), rel=1e-12)


def test_monte_carlo_against_exact():
    k = QiKernel("FULL", 0.4, 8)
    exact = qi_second_moment_exact(k, 0.5)
    est = qi_second_moment_mc(k, 0.5, 100_000, 17, Stream(12))
    assert abs(est.value - exact) < 3 * est.stderr


def test_monte_carlo_closed_form_and_error_scaling():
    k = QiKernel("Q1_SYM", 0.5, 2)
    exact = 72 * (1 - math.cos(1 / 3))
    small = qi_second_moment_mc(k, 1.0, 20_000, 17, Stream(4))
    large = qi_second_moment_mc(k, 1.0, 80_000, 17, Stream(4))
    assert abs(large.value - exact) < 3 * large.stderr
    assert small.stderr / large.stderr == pytest.approx(2.0, rel=0.15)
    assert qi_second_moment_mc(k, 0.0, 10, 17, Stream(4)).value == 0
    with pytest.raises(ValueError):
        qi_second_moment_mc(k, 1.0, 10, 4, Stream(4))


def test_monte_carlo_thread_independent():
    k = QiKernel("FULL", 0.4, 8)
    a = qi_second_moment_mc(k, 0.5, 9000, 9, Stream(1), threads=1)
    b = qi_second_moment_mc(k, 0.5, 9000, 9, Stream(1), threads=3)
    assert a == b


def test_scaling_fit_in_supercritical_regime():
    fit = qi_scaling_fit(0.75, 0.1, [128, 256, 512, 1024])
    # converging values: the top octave is nearly flat
    local = math.log(fit.values[-1] / fit.values[-2]) / math.log(2)
    assert 0 <= local <= 0.05
    assert fit.slope < 0.15
    with pytest.raises(ValueError):
        qi_scaling_fit(0.25, 0.1, [64])


def test_halfcase_small():
    hc = qi_halfcase_ratio(0.1, [16, 32, 64])
    assert all(r > 0 for r in hc.ratios)
    assert hc.log_slope > 0


def test_gamma_restriction_is_a_subsum():
    full = qi_second_moment_exact(QiKernel("Q1_SYM", 0.5, 64), 0.1)
    part = qi_gamma_restricted(0.1, 64)
    assert 0 < part < full


class TestExponents:
    def test_schedule_examples(self):
        sch = ExponentSchedule(2.0, 1.25)
        assert exponent_schedule(sch, 1) == pytest.approx(1.25, rel=1e-15)
        assert exponent_schedule(sch, 2) == pytest.approx(10 / 9, rel=1e-14)
        assert exponent_schedule(sch, 3) == pytest.approx(20 / 19, rel=1e-14)

    @pytest.mark.parametrize("p,r1", [(2.0, 1.25), (3.0, 1.5)])
    def test_closed_form_equals_recursion(self, p, r1):
        sch = ExponentSchedule(p, r1)
        vals = [exponent_schedule(sch, j) for j in range(1, 65)]
        for j, v in enumerate(vals, start=1):
            assert v == pytest.approx(exponent_recursion(sch, j), rel=1e-12)
        assert all(a > b > 1 for a, b in zip(vals[:20], vals[1:20]))
        assert all(a >= b >= 1 for a, b in zip(vals, vals[1:]))
        assert vals[-1] - 1 < 1e-10

    def test_integrability_exponent(self):
        sch = ExponentSchedule(2.0, 1.25)
        assert integrability_exponent(sch, 0.0) == pytest.approx(5 / 3, rel=1e-14)
        qs = [integrability_exponent(sch, t) for t in np.linspace(0, 20, 41)]
        assert all(a > b for a, b in zip(qs, qs[1:]))
        assert integrability_exponent(sch, 200.0) == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ValueError):
            integrability_exponent(sch, -1.0)

    def test_admissible_params(self):
        assert admissible_params(1.0, 1.0, 1.0)[0] == 1.0
        p_min, tau = admissible_params(1.25, 1.0, 1.0)
        assert p_min == pytest.approx((10 + math.sqrt(20)) / 8, rel=1e-12)
        assert tau is None
        assert admissible_params(1.25, 1.0, 1.0, p=2.0)[1] == pytest.approx(0.6, rel=1e-14)
        with pytest.raises(ValueError):
            admissible_params(1.25, 1.0, 1.0, p=1.5)
        with pytest.raises(ValueError):
            admissible_params(0.9, 1.0, 1.0)

    @pytest.mark.parametrize("p,r1", [(1.0, 1.1), (2.0, 1.0), (1.5, 1.4), (2.0, 2.5)])
    def test_schedule_invariants(self, p, r1):
        with pytest.raises(ValueError):
            ExponentSchedule(p, r1)
