import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensebench.noise import NoiseSpec
from sensebench.response import (
    InvertibleBranch,
    ResponseSource,
    StationaryPointError,
    TrigPolynomial,
    derivative_trig,
    eval_trig,
    find_branch,
    invert_on_branch,
    max_gradient_point,
    response_variance,
    sample_response,
)

coef = st.floats(-1.0, 1.0, allow_nan=False)


def random_poly(rng, n, scale=1.0):
    return TrigPolynomial(rng.uniform(-1, 1, n) * scale, rng.uniform(-1, 1, n) * scale, rng.uniform(-1, 1) * scale)


def termwise(poly, theta):
    total = poly.c
    for s in range(1, poly.degree + 1):
        total += poly.a[s - 1] * math.cos(s * theta) + poly.b[s - 1] * math.sin(s * theta)
    return total


class TestEvalTrig:
    def test_cosine_at_zero(self):
        assert eval_trig(TrigPolynomial([1.0], [0.0]), 0.0) == 1.0

    def test_degree_five_half_period(self):
        p = 1 - math.exp(-0.1)
        poly = TrigPolynomial.cosine(5, 1 - p)
        assert eval_trig(poly, math.pi / 5) == pytest.approx(-(1 - p), abs=1e-15)

    def test_local_depol_amplitude(self):
        poly = TrigPolynomial.cosine(3, 0.99**2)
        assert eval_trig(poly, 0.0) == pytest.approx(0.9801, abs=1e-15)

    def test_vectorised(self):
        poly = TrigPolynomial.cosine(2)
        th = np.array([0.0, math.pi / 4, math.pi / 2])
        np.testing.assert_allclose(eval_trig(poly, th), [1.0, 0.0, -1.0], atol=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**31 - 1), st.floats(-50, 50))
    def test_matches_termwise_sum(self, n, seed, theta):
        poly = random_poly(np.random.default_rng(seed), n)
        assert eval_trig(poly, theta) == pytest.approx(termwise(poly, theta), abs=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**31 - 1), st.floats(-20, 20))
    def test_periodic(self, n, seed, theta):
        poly = random_poly(np.random.default_rng(seed), n)
        assert abs(eval_trig(poly, theta) - eval_trig(poly, theta + 2 * math.pi)) < 1e-12

    def test_mismatched_coefficients_rejected(self):
        with pytest.raises(ValueError):
            TrigPolynomial([1.0, 2.0], [0.0])


class TestDerivative:
    def test_sine(self):
        assert derivative_trig(TrigPolynomial([1.0], [0.0]), math.pi / 2) == pytest.approx(-1.0)

    def test_stationary(self):
        assert derivative_trig(TrigPolynomial.cosine(4), 0.0) == 0.0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 2**31 - 1), st.floats(-10, 10))
    def test_central_difference(self, n, seed, theta):
        poly = random_poly(np.random.default_rng(seed), n, 0.3)
        h = 1e-6
        fd = (eval_trig(poly, theta + h) - eval_trig(poly, theta - h)) / (2 * h)
        assert derivative_trig(poly, theta) == pytest.approx(fd, abs=1e-6)


class TestBranch:
    def test_cos2_quarter(self):
        br = find_branch(ResponseSource.noiseless_ghz(2), math.pi / 4)
        assert br.theta_min == pytest.approx(0.0, abs=1e-11)
        assert br.theta_max == pytest.approx(math.pi / 2, abs=1e-11)
        assert br.direction == -1

    def test_cos1_half_period_any_noise(self):
        src = ResponseSource("analytic-global-depol", 1, noise=NoiseSpec.global_depolarizing(0.7))
        br = find_branch(src, math.pi / 2)
        assert (br.theta_min, br.theta_max) == pytest.approx((0.0, math.pi), abs=1e-11)
        assert br.y_lo == pytest.approx(-math.exp(-0.7))

    def test_stationary_centre_rejected(self):
        with pytest.raises(StationaryPointError):
            find_branch(ResponseSource.noiseless_ghz(3), 0.0)

    @pytest.mark.parametrize("seed", range(8))
    def test_asymmetric_endpoints_stationary(self, seed):
        rng = np.random.default_rng(seed)
        poly = random_poly(rng, 4, 0.2)
        centre = 1.0
        while abs(derivative_trig(poly, centre)) < 1e-3:
            centre += 0.1
        br = find_branch(poly, centre)
        assert abs(derivative_trig(poly, br.theta_min)) < 1e-9
        assert abs(derivative_trig(poly, br.theta_max)) < 1e-9
        # dense-grid oracle: derivative keeps its sign strictly inside
        grid = np.linspace(br.theta_min, br.theta_max, 20001)[1:-1]
        assert np.all(np.sign(derivative_trig(poly, grid)) == br.direction)

    def test_branch_validation(self):
        with pytest.raises(ValueError):
            InvertibleBranch(1.0, 0.5, 1, 0.0, 1.0)
        with pytest.raises(ValueError):
            InvertibleBranch(0.0, 7.0, 1, 0.0, 1.0)


class TestInversion:
    def test_cos_midpoint(self):
        src = ResponseSource.noiseless_ghz(1)
        br = find_branch(src, math.pi / 2)
        assert invert_on_branch(src, br, 0.0) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_clamped(self):
        src = ResponseSource.noiseless_ghz(1)
        br = find_branch(src, math.pi / 2)
        assert invert_on_branch(src, br, 1.3) == pytest.approx(0.0, abs=1e-11)
        assert invert_on_branch(src, br, -7.0) == pytest.approx(math.pi, abs=1e-11)

    @pytest.mark.parametrize("n", [1, 3, 5, 8])
    def test_round_trip_grid(self, n):
        src = ResponseSource("analytic-global-depol", n, noise=NoiseSpec.global_depolarizing(0.2))
        br = find_branch(src, math.pi / (2 * n))
        th = np.linspace(br.theta_min, br.theta_max, 102)[1:-1]
        back = np.array([invert_on_branch(src, br, src(t)) for t in th])
        np.testing.assert_allclose(back, th, atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.02, 0.98))
    def test_round_trip_random_poly(self, seed, frac):
        poly = random_poly(np.random.default_rng(seed), 3, 0.25)
        centre = 0.5
        while abs(derivative_trig(poly, centre)) < 1e-2:
            centre += 0.05
        br = find_branch(poly, centre)
        theta = br.theta_min + frac * (br.theta_max - br.theta_min)
        back = invert_on_branch(poly, br, eval_trig(poly, theta))
        assert abs(eval_trig(poly, back) - eval_trig(poly, theta)) <= 1e-12
        slope = abs(derivative_trig(poly, theta))
        if slope > 1e-2:
            assert back == pytest.approx(theta, abs=1e-10)


def test_max_gradient_point_noiseless():
    src = ResponseSource.noiseless_ghz(4)
    br = find_branch(src, 0.3)
    assert max_gradient_point(src, br) == pytest.approx(math.pi / 8, abs=1e-9)


class TestVariance:
    def test_eigenstate(self):
        assert response_variance(1.0) == 0.0

    def test_zero(self):
        assert response_variance(0.0) == 1.0

    def test_depol_form(self):
        p, n, th = 1 - math.exp(-0.3), 4, 0.37
        r = (1 - p) * math.cos(n * th)
        assert response_variance(r) == pytest.approx(1 - (1 - p) ** 2 * math.cos(n * th) ** 2)

    def test_domain(self):
        with pytest.raises(ValueError):
            response_variance(1.01)


class TestSampling:
    def test_deterministic_eigenstate(self):
        rng = np.random.default_rng(0)
        assert all(sample_response(1.0, 17, rng).value == 1.0 for _ in range(20))

    def test_single_shot_values(self):
        rng = np.random.default_rng(1)
        vals = [sample_response(0.0, 1, rng).value for _ in range(4000)]
        assert set(vals) == {-1.0, 1.0}
        assert abs(np.mean(vals)) < 5 / math.sqrt(4000)

    def test_binomial_variance(self):
        rng = np.random.default_rng(2)
        vals = np.array([sample_response(0.5, 10**6, rng).value for _ in range(1000)])
        assert np.var(vals, ddof=1) == pytest.approx(0.75e-6, rel=0.1)

    def test_mean_and_variance_many_draws(self):
        rng = np.random.default_rng(3)
        n_shots, r = 50, -0.3
        vals = np.array([sample_response(r, n_shots, rng).value for _ in range(10**5)])
        se = math.sqrt((1 - r * r) / n_shots / vals.size)
        assert abs(vals.mean() - r) < 5 * se
        assert np.var(vals, ddof=1) == pytest.approx((1 - r * r) / n_shots, rel=0.1)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-1, 1), st.integers(1, 200), st.integers(0, 2**31 - 1))
    def test_lattice(self, r, shots, seed):
        est = sample_response(r, shots, np.random.default_rng(seed))
        k = (est.value + 1) * shots / 2
        assert abs(k - round(k)) < 1e-9 and est.shots == shots

    def test_domain(self):
        with pytest.raises(ValueError):
            sample_response(1.2, 10, np.random.default_rng(0))
        with pytest.raises(ValueError):
            sample_response(0.2, 0, np.random.default_rng(0))
