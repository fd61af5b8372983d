import math

import numpy as np
import pytest

from micropolar import (
    BesovParams,
    ConfigurationError,
    DataFamily,
    DataKind,
    FieldSelector,
    InconsistentState,
    IntegratorConfig,
    InvalidParameters,
    PhysicalParams,
    Probe,
    Scheme,
    State,
    VectorField,
    apply_semigroups,
    besov_norm,
    continuation_from_shells,
    damping_multiplier,
    divergence_residual,
    gradient,
    make_initial_data,
    random_scalar,
    run,
    step,
    transform,
)


def _relative_gap(a: State, b: State) -> float:
    diff = np.max(np.abs(a.u.modes - b.u.modes)) + np.max(np.abs(a.omega.modes - b.omega.modes))
    scale = np.max(np.abs(a.u.modes)) + np.max(np.abs(a.omega.modes))
    return float(diff / scale)


class TestIntegratorConfig:
    def test_defaults_are_valid(self, grid16):
        cfg = IntegratorConfig()
        assert cfg.violations(grid16) == []
        assert cfg.steps == 10

    def test_steps_fit_the_horizon(self):
        cfg = IntegratorConfig(dt=0.3, t_end=1.0)
        assert cfg.steps == 4
        assert cfg.step_size == pytest.approx(0.25)
        assert cfg.steps * cfg.step_size == pytest.approx(1.0, rel=1e-15)
        assert IntegratorConfig(dt=2.0, t_end=1.0).step_size == 1.0
        assert IntegratorConfig(dt=0.1, t_end=0.5).steps == 5

    def test_run_ends_at_the_horizon(self, state16):
        result = run(state16, IntegratorConfig(dt=0.3, t_end=1.0))
        assert result.times[-1] == 1.0
        assert result.final.t == 1.0
        np.testing.assert_allclose(np.diff(result.times), 0.25, rtol=1e-12)

    def test_violations_are_collected(self):
        cfg = IntegratorConfig(dt=0.0, t_end=-1.0, sample_stride=0, continuation_window=0.0)
        assert len(cfg.violations()) == 4
        with pytest.raises(ConfigurationError) as info:
            cfg.validate()
        assert len(info.value.violations) == 4

    def test_rk4_stability_bound(self, grid16):
        bound = IntegratorConfig.rk4_stability_bound(grid16)
        assert bound == pytest.approx(2.78 / (2 * 75 + 2))
        assert IntegratorConfig(dt=0.9 * bound, scheme=Scheme.REF_RK4).violations(grid16) == []
        problems = IntegratorConfig(dt=1.1 * bound, scheme=Scheme.REF_RK4).violations(grid16)
        assert len(problems) == 1
        assert 'stability bound' in problems[0]
        # exponential schemes are not bound by the stiffness
        assert IntegratorConfig(dt=1.0, scheme=Scheme.ETDRK2).violations(grid16) == []


class TestInitialData:
    @pytest.mark.parametrize('kind', [DataKind.GAUSSIAN, DataKind.CANNONE_OSC, DataKind.SHELL_RANDOM])
    def test_families_are_admissible(self, grid16, kind):
        family = DataFamily(kind, amplitude=0.5, epsilon=0.25, shell=1, seed=3)
        s = make_initial_data(family, grid16)
        assert s.t == 0
        assert divergence_residual(s.u) < 1e-12
        assert np.all(s.u.modes[:, ~grid16.dealias_mask] == 0)
        assert np.all(s.omega.modes[:, ~grid16.dealias_mask] == 0)
        assert s.u.norm_l2() > 0

    def test_gaussian_is_real(self, grid16):
        s = make_initial_data(DataFamily(), grid16)
        assert s.is_real
        assert s.u.reality_defect() < 1e-12

    def test_oscillation_must_sit_on_the_lattice(self, grid16):
        assert DataFamily(DataKind.CANNONE_OSC, epsilon=0.5).violations(grid16) == []
        with pytest.raises(ConfigurationError):
            make_initial_data(DataFamily(DataKind.CANNONE_OSC, epsilon=0.3), grid16)
        with pytest.raises(ConfigurationError):
            make_initial_data(DataFamily(DataKind.CANNONE_OSC), grid16)

    @pytest.mark.parametrize('shell', [None, 0, 3])
    def test_shell_must_be_resolved(self, grid16, shell):
        with pytest.raises(ConfigurationError):
            make_initial_data(DataFamily(DataKind.SHELL_RANDOM, shell=shell), grid16)

    def test_shell_random_is_reproducible(self, grid16):
        family = DataFamily(DataKind.SHELL_RANDOM, shell=2, seed=9)
        first = make_initial_data(family, grid16)
        second = make_initial_data(family, grid16)
        assert first.u == second.u and first.omega == second.omega

    def test_normalisation(self, grid16):
        s = make_initial_data(DataFamily(normalize_to=0.2), grid16)
        measured = besov_norm((s.u, s.omega), BesovParams(0.5, 2, math.inf))
        assert measured == pytest.approx(0.2, rel=1e-10)

    def test_zero_amplitude(self, grid16):
        s = make_initial_data(DataFamily(amplitude=0.0, normalize_to=1.0), grid16)
        assert not np.any(s.u.modes) and not np.any(s.omega.modes)


class TestProbe:
    def test_names(self):
        assert Probe(BesovParams(0.5, 2, 'inf')).name == 'both_s0.5_p2_qinf'
        probe = Probe(BesovParams(-0.5, 'inf', 1), FieldSelector.U, (1, 0, 0))
        assert probe.name == 'u_s-0.5_pinf_q1_d100'

    def test_pair_norm_is_the_sum(self, state16):
        params = BesovParams(0.5, 2, 2)
        both = Probe(params).evaluate(state16)
        u = Probe(params, FieldSelector.U).evaluate(state16)
        omega = Probe(params, FieldSelector.OMEGA).evaluate(state16)
        assert both == pytest.approx(u + omega, rel=1e-12)


class TestStep:
    def test_linear_step_is_the_semigroup(self, state16):
        cfg = IntegratorConfig(dt=0.05, nonlinear=False)
        ts, s = step(transform(state16), state16, cfg)
        assert s.t == pytest.approx(0.05)
        assert ts.distance(apply_semigroups(transform(state16), 0.05)) < 1e-13

    def test_consistency_is_checked(self, state16, grid16):
        with pytest.raises(InconsistentState):
            step(transform(State.zero(grid16)), state16, IntegratorConfig())

    def test_exponential_schemes_need_default_coefficients(self, state16):
        with pytest.raises(InvalidParameters):
            step(transform(state16), state16, IntegratorConfig(), params=PhysicalParams(chi=1.0))

    @pytest.mark.parametrize('scheme', [Scheme.ETD1, Scheme.ETDRK2])
    def test_gradient_part_stays_decoupled(self, grid16, rng, scheme):
        omega = gradient(random_scalar(grid16, rng)) * 1e-2
        s0 = State(VectorField.zeros(grid16), omega)
        final = run(s0, IntegratorConfig(dt=0.05, t_end=0.2, scheme=scheme)).final
        assert not np.any(final.u.modes)
        ts0, ts = transform(s0), transform(final)
        assert np.max(np.abs(ts.omega_Omega.modes)) < 1e-15
        expected = ts0.omega_d.modes * damping_multiplier(grid16.kmag, 0.2)
        np.testing.assert_allclose(ts.omega_d.modes, expected, rtol=1e-12, atol=1e-16)

    def test_schemes_agree(self, grid16):
        s0 = make_initial_data(DataFamily(DataKind.SHELL_RANDOM, amplitude=0.1, shell=1, seed=5), grid16)
        final = {}
        for scheme in (Scheme.ETD1, Scheme.ETDRK2, Scheme.REF_RK4):
            cfg = IntegratorConfig(dt=0.005, t_end=0.05, scheme=scheme)
            final[scheme] = run(s0, cfg).final
        assert _relative_gap(final[Scheme.REF_RK4], final[Scheme.ETDRK2]) < 1e-3
        assert _relative_gap(final[Scheme.REF_RK4], final[Scheme.ETD1]) < 1e-2
        assert divergence_residual(final[Scheme.ETDRK2].u) < 1e-12


class TestRun:
    def test_sampling(self, state16):
        cfg = IntegratorConfig(dt=0.1, t_end=0.5, sample_stride=2)
        probe = Probe(BesovParams(0.5, 2, 'inf'))
        result = run(state16, cfg, [probe], ledger_exponents=[2, 'inf'])
        assert result.times == pytest.approx([0.0, 0.2, 0.4, 0.5])
        assert result.columns == ['t', probe.name, 'energy', 'div_residual', 'continuation']
        assert len(result.rows()) == len(result) == 4
        assert result.shells == [1, 2]
        assert set(result.ledger) == {2.0, math.inf}
        assert result.ledger[2.0][0].shape == (6, 2)
        assert result.continuation[0] == 0
        assert result.final.t == pytest.approx(0.5)

    def test_energy_decays(self, state16):
        result = run(state16, IntegratorConfig(dt=0.05, t_end=0.5))
        assert np.all(np.diff(result.energy) < 0)
        assert max(result.div_residual) < 1e-12

    def test_snapshot_sink(self, state16):
        seen = []
        run(state16, IntegratorConfig(dt=0.1, t_end=0.4), snapshot_sink=seen.append, snapshot_stride=2)
        assert [s.t for s in seen] == pytest.approx([0.0, 0.2, 0.4])

    def test_invalid_config(self, state16):
        with pytest.raises(ConfigurationError):
            run(state16, IntegratorConfig(dt=0.1, scheme=Scheme.REF_RK4))

    def test_rk4_with_other_coefficients(self, state16, grid16):
        dt = 0.5 * IntegratorConfig.rk4_stability_bound(grid16)
        cfg = IntegratorConfig(dt=dt, t_end=5 * dt, scheme=Scheme.REF_RK4)
        result = run(state16, cfg, params=PhysicalParams(chi=1.0, nu=0.1, kappa=0.5, mu=0.3))
        assert len(result) == 6
        assert result.energy[-1] < result.energy[0]


class TestContinuation:
    def test_trailing_window(self):
        norms = [np.array([1.0, 2.0])] * 3
        assert continuation_from_shells([0.0, 1.0, 2.0], norms, 10.0) == pytest.approx(4.0)
        assert continuation_from_shells([0.0, 1.0, 2.0], norms, 1.0) == pytest.approx(2.0)
        assert continuation_from_shells([0.0, 1.0, 2.0], norms, 0.5) == 0.0
        assert continuation_from_shells([0.0], norms[:1], 10.0) == 0.0
