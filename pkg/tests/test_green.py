import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from micropolar import (
    FullGreen,
    GridSpec,
    NumericError,
    ReducedGreen,
    ScalarField,
    State,
    Verdict,
    apply_full_green,
    apply_reduced_green,
    apply_semigroups,
    damping_multiplier,
    full_green_eval,
    log_grid,
    propagator,
    random_vector,
    reduced_green_eval,
    scan_derivative_bounds,
    transform,
)

rhos = st.floats(0.0, 50.0)
times = st.floats(0.0, 5.0)


class TestReducedGreen:
    def test_limits(self):
        g = reduced_green_eval(0.0, 1.0)
        np.testing.assert_allclose(g, np.diag([1.0, math.exp(-2.0)]), atol=1e-15)
        at_zero = reduced_green_eval(np.array([0.5, 3.0]), 0.0)
        np.testing.assert_allclose(at_zero, np.broadcast_to(np.eye(2), (2, 2, 2)), atol=1e-15)

    @given(rho=rhos, t=times)
    @settings(max_examples=200)
    def test_matches_scipy_expm(self, rho, t):
        reference = expm(-t * ReducedGreen.generator(rho))
        np.testing.assert_allclose(reduced_green_eval(rho, t), reference, atol=1e-12)

    @given(rho=rhos, t=times, s=times)
    def test_semigroup(self, rho, t, s):
        composed = reduced_green_eval(rho, t) @ reduced_green_eval(rho, s)
        np.testing.assert_allclose(composed, reduced_green_eval(rho, t + s), atol=1e-12)

    @given(rho=rhos, t=times)
    def test_symmetric_contraction(self, rho, t):
        g = reduced_green_eval(rho, t)
        assert g[0, 1] == g[1, 0]
        assert np.linalg.norm(g, 2) <= 1 + 1e-12

    def test_shift_folds_the_weight_in(self):
        rho = np.array([10.0, 25.0])
        t = np.array([3.0, 5.0])
        shifted = reduced_green_eval(rho, t, shift=rho**2)
        assert np.all(np.isfinite(shifted))
        weight = np.exp(-(rho**2) * t)[:, None, None]
        np.testing.assert_allclose(shifted * weight, reduced_green_eval(rho, t), rtol=1e-10)

    def test_eigenvalues(self):
        rho = log_grid(1e-2, 1e3, 30)
        lower, upper = ReducedGreen.eigenvalues(rho)
        direct = np.linalg.eigvalsh(ReducedGreen.generator(rho))
        np.testing.assert_allclose(lower, direct[:, 0], rtol=1e-9, atol=1e-13)
        np.testing.assert_allclose(upper, direct[:, 1], rtol=1e-12)
        assert np.all(lower > 0)

    def test_function_of_the_generator(self):
        rho = np.array([0.2, 1.0, 7.0])
        green = ReducedGreen()
        p_minus, p_plus = green.projectors(rho)
        np.testing.assert_allclose(p_minus + p_plus, np.broadcast_to(np.eye(2), (3, 2, 2)), atol=1e-15)
        np.testing.assert_allclose(p_minus @ p_plus, 0, atol=1e-15)
        np.testing.assert_allclose(green.function(rho, lambda lam: lam), green.generator(rho), atol=1e-12)
        np.testing.assert_allclose(green.function(rho, lambda lam: np.exp(-0.7 * lam)), green(rho, 0.7), atol=1e-14)

    def test_damping_multiplier(self):
        assert damping_multiplier(2.0, 0.5) == pytest.approx(math.exp(-5.0))


class TestPropagator:
    def test_weights(self, grid16):
        h = 0.1
        prop = propagator(grid16, h)
        assert propagator(grid16, h) is prop
        semigroup, w1, _ = prop.pair
        np.testing.assert_allclose(np.moveaxis(semigroup, (0, 1), (-2, -1)), reduced_green_eval(grid16.kmag, h))
        # hφ₁(0) = h on the mean, where the rate of the pair vanishes
        np.testing.assert_allclose(w1[:, :, 0, 0, 0], np.diag([h, (1 - math.exp(-2 * h)) / 2]), atol=1e-15)
        assert prop.mean[0] == pytest.approx(math.exp(-2 * h))
        with pytest.raises(ValueError):
            propagator(grid16, 0.0)

    def test_semigroups_on_states(self, state16):
        ts = transform(state16)
        once = apply_semigroups(apply_semigroups(ts, 0.3), 0.2)
        twice = apply_semigroups(ts, 0.5)
        assert once.distance(twice) < 1e-13
        assert twice.t == pytest.approx(0.5)
        with pytest.raises(ValueError):
            apply_semigroups(ts, -1.0)

    def test_reduced_green_on_pairs(self, grid16, rng):
        v = random_vector(grid16, rng)
        f1, f2 = v.components[0], v.components[1]
        a, b = apply_reduced_green((f1, f2), 0.0)
        assert a == f1 and b == f2
        a, b = apply_reduced_green((f1, f2), 1.0)
        assert math.hypot(a.norm_l2(), b.norm_l2()) < math.hypot(f1.norm_l2(), f2.norm_l2())
        assert isinstance(a, ScalarField) and a.is_real


class TestFullGreen:
    def test_symbol_is_hermitian(self, rng):
        a = FullGreen.symbol(rng.standard_normal((10, 3)))
        np.testing.assert_allclose(a, np.conj(np.swapaxes(a, -1, -2)), atol=0)

    @pytest.mark.parametrize('t', [0.0, 0.01, 0.5, 3.0])
    def test_methods_agree(self, rng, t):
        xi = rng.standard_normal((20, 3)) * 5
        green = FullGreen()
        reference = np.stack([expm(-t * a) for a in FullGreen.symbol(xi)])
        np.testing.assert_allclose(green.evaluate(xi, t), reference, atol=1e-11)
        np.testing.assert_allclose(green.evaluate(xi, t, method='eigh'), reference, atol=1e-11)
        np.testing.assert_allclose(full_green_eval(xi, t), reference, atol=1e-11)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            FullGreen().evaluate(np.ones(3), 1.0, method='taylor')

    def test_non_finite_result(self):
        with pytest.raises(NumericError):
            FullGreen().evaluate(np.array([[1e3, 0.0, 0.0]]), -1e3)

    def test_matches_the_reduced_evolution(self):
        grid = GridSpec(16, 3 * math.pi)
        rng = np.random.default_rng(11)
        u = random_vector(grid, rng, solenoidal=True)
        w = random_vector(grid, rng)
        u_t, w_t = apply_full_green(u, w, 0.4, chunk=500)
        assert u_t.is_real and w_t.is_real
        assert transform(State(u_t, w_t, 0.4)).distance(apply_semigroups(transform(State(u, w)), 0.4)) < 1e-10


class TestBoundScan:
    @pytest.mark.parametrize('order', [0, 1, 2])
    def test_bounded_sup(self, order):
        report = scan_derivative_bounds(order, log_grid(0.1, 30.0, 25), log_grid(0.01, 10.0, 25))
        assert report.verdict is Verdict.PASS
        assert 0 < report.measured_sup < 1e3
        assert report.alpha == [order]
        payload = report.to_payload()
        assert payload['verdict'] == 'pass'
        assert len(payload['rho']) == 25

    def test_multi_index_order(self):
        report = scan_derivative_bounds((1, 1, 0), [1.0, 2.0], [0.5])
        assert report.alpha == [1, 1, 0]

    def test_small_steps_are_flagged(self):
        report = scan_derivative_bounds(2, [1.0, 2.0], [0.5], relative_step=1e-7)
        assert report.diagnostics

    @pytest.mark.parametrize('alpha, rho', [(3, [1.0]), ((2, 1, 0), [1.0]), (1, [0.0, 1.0])])
    def test_invalid_arguments(self, alpha, rho):
        with pytest.raises(ValueError):
            scan_derivative_bounds(alpha, rho, [1.0])
