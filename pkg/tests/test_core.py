import math

import numpy as np
import pytest

from micropolar import (
    CURL_SIGN,
    DivergenceViolation,
    GridMismatch,
    InconsistentState,
    InvalidParameters,
    PhysicalParams,
    ReducedGreen,
    ScalarField,
    State,
    VectorField,
    convection,
    curl,
    curl_matrix,
    decompose_omega,
    divergence_residual,
    energy,
    from_antisymmetric,
    gradient,
    nonlinear_terms,
    random_scalar,
    random_vector,
    reconstruct_omega,
    rhs_projected,
    rhs_transformed,
    to_antisymmetric,
    to_state,
    transform,
    transform_tendency,
)


def _with_mean(v: VectorField, mean) -> VectorField:
    modes = np.array(v.modes)
    modes[:, 0, 0, 0] = mean
    return v.with_modes(modes)


def _inner(a: VectorField, b: VectorField) -> float:
    return float(np.real(np.vdot(a.modes, b.modes)))


class TestParams:
    def test_defaults(self):
        params = PhysicalParams()
        assert (params.chi, params.nu, params.kappa, params.mu) == (0.5, 0.5, 1.0, 1.0)
        assert params.is_default
        assert not PhysicalParams(chi=0.25).is_default

    @pytest.mark.parametrize(
        'kwargs', [{'chi': -1.0}, {'kappa': -0.1}, {'mu': 0.0}, {'chi': 0.0, 'nu': 0.0}]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParameters):
            PhysicalParams(**kwargs)


class TestState:
    def test_velocity_must_be_solenoidal(self, grid16, rng):
        with pytest.raises(DivergenceViolation) as info:
            State(random_vector(grid16, rng), random_vector(grid16, rng))
        assert info.value.residual > 1e-10

    def test_time_must_be_nonnegative(self, grid16):
        zero = VectorField.zeros(grid16)
        with pytest.raises(ValueError):
            State(zero, zero, -1.0)

    def test_grids_must_match(self, grid16, grid32):
        with pytest.raises(GridMismatch):
            State(VectorField.zeros(grid16), VectorField.zeros(grid32))

    def test_zero_state(self, grid16):
        s = State.zero(grid16)
        assert s.is_real
        assert energy(s) == 0
        assert divergence_residual(s.u) == 0

    def test_energy(self, state16):
        expected = 0.5 * (state16.u.norm_l2() ** 2 + state16.omega.norm_l2() ** 2)
        assert energy(state16) == pytest.approx(expected)


class TestTransform:
    def test_antisymmetric_roundtrip(self, grid16, rng):
        u = random_vector(grid16, rng)
        a = to_antisymmetric(u)
        assert a.entry(0, 1) == u.components[2]
        assert a.entry(0, 2) == -u.components[1]
        assert a.entry(1, 2) == u.components[0]
        assert from_antisymmetric(a) == u

    def test_curl_sign(self, grid16, rng):
        for _ in range(50):
            z = random_vector(grid16, rng, real=bool(rng.integers(2)))
            np.testing.assert_allclose(
                to_antisymmetric(curl(z)).modes, (curl_matrix(z) * CURL_SIGN).modes, atol=1e-14
            )

    def test_omega_reconstruction(self, grid16, rng):
        omega = random_vector(grid16, rng)
        omega_d, omega_Omega = decompose_omega(omega)
        assert omega_d.modes[0, 0, 0] == 0
        np.testing.assert_allclose(reconstruct_omega(omega_d, omega_Omega).modes, omega.modes, atol=1e-14)

    def test_gradient_part_lives_in_omega_d(self, grid16, rng):
        omega = gradient(random_scalar(grid16, rng))
        _, omega_Omega = decompose_omega(omega)
        assert np.max(np.abs(omega_Omega.modes)) < 1e-14

    def test_state_roundtrip_keeps_the_mean(self, state16):
        omega = _with_mean(state16.omega, [0.3, -0.1, 0.2])
        s = State(state16.u, omega, 1.5)
        ts = transform(s)
        np.testing.assert_allclose(ts.omega_mean, [0.3, -0.1, 0.2])
        back = to_state(ts)
        assert back.t == 1.5
        np.testing.assert_allclose(back.omega.modes, omega.modes, atol=1e-14)
        np.testing.assert_allclose(back.u.modes, s.u.modes, atol=0)
        assert ts.distance(transform(back)) < 1e-14


class TestTendencies:
    @pytest.mark.parametrize('seed', range(20))
    def test_transformed_system_matches_the_projected_one(self, grid16, seed):
        rng = np.random.default_rng(seed)
        u = random_vector(grid16, rng, solenoidal=True) * 1e-2
        omega = _with_mean(random_vector(grid16, rng) * 1e-2, rng.standard_normal(3) * 1e-2)
        s = State(u, omega, seed * 0.1)
        expected = transform_tendency(*rhs_projected(s))
        actual = rhs_transformed(transform(s), s)
        for mine, theirs in zip(actual[:3], expected[:3]):
            scale = np.max(np.abs(theirs.modes))
            assert np.max(np.abs(mine.modes - theirs.modes)) <= 1e-10 * scale
        np.testing.assert_allclose(actual.omega_mean, expected.omega_mean, atol=1e-14)

    def test_single_mode_follows_the_reduced_generator(self, grid16):
        x1, _, _ = grid16.coordinates()
        shape = grid16.shape
        cos = np.broadcast_to(np.cos(2 * x1), shape)
        sin = np.broadcast_to(np.sin(2 * x1), shape)
        zero = np.zeros(shape)
        # fields of x1 alone with u1 = 0: both convection terms vanish
        u = VectorField.from_values(grid16, 1e-3 * np.stack([zero, cos, sin]))
        omega = VectorField.from_values(grid16, 1e-3 * np.stack([sin, cos, -sin]))
        s = State(u, omega)
        ts = transform(s)
        tendency = rhs_transformed(ts, s)

        k = (slice(None), 2, 0, 0)
        pair = np.stack([ts.u_A.modes[k], ts.omega_Omega.modes[k]])
        assert np.all(np.abs(pair).max(axis=1) > 1e-5)
        expected = -ReducedGreen.generator(2.0) @ pair
        actual = np.stack([tendency.u_A.modes[k], tendency.omega_Omega.modes[k]])
        np.testing.assert_allclose(actual, expected, rtol=1e-12, atol=1e-18)

        assert abs(ts.omega_d.modes[2, 0, 0]) > 1e-5
        assert tendency.omega_d.modes[2, 0, 0] == pytest.approx(-10 * ts.omega_d.modes[2, 0, 0], rel=1e-12)

    def test_parallel_omega_decays_at_the_damped_rate(self, grid16):
        x1, x2, _ = grid16.coordinates()
        phi = ScalarField.from_values(grid16, np.broadcast_to(np.cos(x1 + 2 * x2), grid16.shape))
        omega = gradient(phi) * 1e-2
        s = State(VectorField.zeros(grid16), omega)
        du, domega = rhs_projected(s)
        # |ξ|² = 5
        np.testing.assert_allclose(domega.modes, (omega * -12.0).modes, atol=1e-14)
        assert np.max(np.abs(du.modes)) < 1e-14

    def test_inconsistent_pair(self, state16, grid16):
        with pytest.raises(InconsistentState):
            rhs_transformed(transform(State.zero(grid16)), state16)

    @pytest.mark.parametrize('params', [PhysicalParams(), PhysicalParams(chi=1.0, nu=0.1, kappa=0.5, mu=0.3)])
    def test_energy_does_not_grow(self, state16, params):
        du, domega = rhs_projected(state16, params)
        rate = _inner(state16.u, du) + _inner(state16.omega, domega)
        assert rate < 0

    def test_dealiased_convection_is_energy_neutral(self, state16):
        nu, nw = nonlinear_terms(state16)
        assert abs(_inner(state16.u, nu)) <= 1e-12 * state16.u.norm_l2() ** 2
        assert abs(_inner(state16.omega, nw)) <= 1e-12 * state16.omega.norm_l2() ** 2
        assert divergence_residual(nu) < 1e-12

    def test_convection_by_a_constant_flow(self, grid16):
        x1, _, _ = grid16.coordinates()
        shape = grid16.shape
        mean = np.zeros((3,) + shape, dtype=complex)
        mean[0, 0, 0, 0] = 1.0
        u = VectorField(grid16, mean, real=True)
        wave = np.broadcast_to(np.sin(x1), shape)
        v = VectorField.from_values(grid16, np.stack([np.zeros(shape), wave, np.zeros(shape)]))
        out = convection(u, v).values()
        np.testing.assert_allclose(out[1], np.broadcast_to(np.cos(x1), shape), atol=1e-12)
        np.testing.assert_allclose(out[0], 0, atol=1e-12)
        assert math.isclose(float(np.max(np.abs(out[2]))), 0.0, abs_tol=1e-12)
