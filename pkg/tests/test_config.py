import math

import pytest

from micropolar import (
    AnalysisSamples,
    ConfigParseError,
    ConfigurationError,
    DataKind,
    FieldSelector,
    GridSpec,
    IntegratorConfig,
    RunConfig,
    Scheme,
    load_config,
    parse_config,
)

FULL = '''
[grid]
n = 32
box_length = 25.132741228718345
dealias_fraction = 0.5

[params]
chi = 0.5
nu = 0.5
kappa = 1
mu = 1

[integrator]
scheme = "etd1"
dt = 0.05
t_end = 2
sample_stride = 4
dealias = true
nonlinear = false
continuation_window = 1.5

[data]
kind = "SHELL_RANDOM"
shell = 0
seed = 7

[[probes]]
field = "u"
s = -0.25
p = 4
q = "inf"

[[probes]]
field = "omega"
s = 0.5
alpha = [1, 0, 0]

[outputs]
csv = "run.csv"
json = "checks.json"
snapshot_dir = "snaps"
snapshot_stride = 3

[verification]
samples = 2
green_n = 32
shells = [1, 2]
exponents = [2, "inf"]
decay_window = [0.5, 2.0]
oscillation_exponents = [5]
'''


def _violations(text: str) -> list:
    with pytest.raises(ConfigurationError) as info:
        parse_config(text)
    return info.value.violations


class TestDefaults:
    def test_empty_document(self):
        cfg = parse_config('')
        assert cfg == RunConfig()
        assert cfg.grid == GridSpec(128, 32 * math.pi)
        assert cfg.integrator == IntegratorConfig()
        assert cfg.data.normalize_to == 0.01
        assert [p.name for p in cfg.probes] == ['both_s0.5_p2_qinf']
        assert cfg.explicit == frozenset()

    def test_dynamics_preset_without_an_integrator_table(self):
        preset = parse_config('[grid]\nn = 32\n').dynamics_preset()
        assert preset.integrator.t_end == 50.0
        assert preset.grid.n == 32
        assert preset.exponents == (2.0, 4.0)


class TestFullDocument:
    def test_every_table(self):
        cfg = parse_config(FULL)
        assert cfg.grid == GridSpec(32, 8 * math.pi, 0.5)
        assert cfg.params.is_default
        assert cfg.integrator.scheme is Scheme.ETD1
        assert cfg.integrator.t_end == 2.0
        assert not cfg.integrator.nonlinear
        assert cfg.data.kind is DataKind.SHELL_RANDOM
        assert (cfg.data.shell, cfg.data.seed) == (0, 7)
        first, second = cfg.probes
        assert first.field is FieldSelector.U
        assert math.isinf(first.params.q) and first.params.p == 4.0
        assert second.alpha == (1, 0, 0)
        assert cfg.outputs.snapshot_dir == 'snaps'
        assert cfg.outputs.snapshot_stride == 3
        assert cfg.verification.exponents == (2.0, math.inf)
        assert cfg.verification.decay_window == (0.5, 2.0)
        assert cfg.verification.samples == AnalysisSamples.uniform(2)
        assert cfg.explicit == {'grid', 'params', 'integrator', 'data', 'probes', 'outputs', 'verification'}

    def test_dynamics_preset_follows_the_document(self):
        preset = parse_config(FULL).dynamics_preset()
        assert preset.integrator.dt == 0.05
        assert preset.exponents == (2.0,)
        assert preset.oscillation_exponents == (5.0,)

    def test_per_check_samples(self):
        cfg = parse_config('[verification.samples]\nproducts = 40\nbony = 3\n')
        samples = cfg.verification.samples
        assert (samples.products, samples.bony) == (40, 3)
        assert samples.bernstein == AnalysisSamples().bernstein
        assert parse_config('').verification.samples == AnalysisSamples()

    def test_load_from_disk(self, tmp_path):
        path = tmp_path / 'experiment.toml'
        path.write_text(FULL, encoding='utf-8')
        assert load_config(path) == parse_config(FULL)


class TestRejections:
    def test_malformed_toml(self):
        with pytest.raises(ConfigParseError) as info:
            parse_config('[grid]\nn = = 3\n')
        assert info.value.line == 2

    def test_unknown_keys_and_tables(self):
        violations = _violations('[grid]\nsize = 32\n\n[solver]\nx = 1\n')
        assert 'unknown table [solver]' in violations
        assert 'unknown key grid.size' in violations

    def test_violations_are_collected(self):
        text = '[grid]\nn = 24\n\n[integrator]\ndt = -1.0\n\n[verification]\nsamples = 0\n'
        violations = _violations(text)
        assert len(violations) == 3
        assert any('n' in v for v in violations)
        assert any('integrator.dt' in v for v in violations)

    def test_bad_sample_table(self):
        violations = _violations('[verification.samples]\nbernstein = 0\nsizes = 2\n')
        assert 'verification.samples.bernstein must be at least 1' in violations
        assert 'unknown key verification.samples.sizes' in violations

    def test_wrong_types(self):
        violations = _violations('[grid]\nn = "big"\n\n[integrator]\ndealias = 1\n')
        assert 'grid.n must be int, got str' in violations
        assert 'integrator.dealias must be bool, got int' in violations

    def test_unknown_scheme(self):
        (violation,) = _violations('[integrator]\nscheme = "RK45"\n')
        assert 'ETD1' in violation

    def test_rk4_stability_guard(self):
        (violation,) = _violations('[integrator]\nscheme = "REF_RK4"\ndt = 0.1\n')
        assert 'stability bound' in violation

    def test_exponential_schemes_need_default_params(self):
        (violation,) = _violations('[params]\nchi = 1.0\n')
        assert 'REF_RK4' in violation

    def test_oscillation_off_the_lattice(self):
        (violation,) = _violations('[data]\nkind = "CANNONE_OSC"\nepsilon = 0.3\n')
        assert 'epsilon' in violation

    def test_duplicate_probes(self):
        text = '[[probes]]\ns = 0.5\n\n[[probes]]\ns = 0.5\np = 2\n'
        assert _violations(text) == ['duplicate probe both_s0.5_p2_qinf']

    def test_probe_order(self):
        (violation,) = _violations('[[probes]]\nalpha = [3, 2, 0]\n')
        assert 'order 5' in violation

    def test_snapshots_need_a_stride(self):
        (violation,) = _violations('[outputs]\nsnapshot_dir = "snaps"\n')
        assert 'snapshot_stride' in violation

    def test_bad_windows_and_exponents(self):
        text = '[verification]\ndecay_window = [2.0, 1.0]\nexponents = [0.5]\noscillation_exponents = [3]\n'
        assert len(_violations(text)) == 3


class TestData:
    def test_explicit_amplitude_drops_the_normalisation(self):
        cfg = parse_config('[data]\namplitude = 0.3\n')
        assert cfg.data.amplitude == 0.3
        assert cfg.data.normalize_to is None

    def test_both_can_be_given(self):
        cfg = parse_config('[data]\namplitude = 0.3\nnormalize_to = 0.05\n')
        assert cfg.data.normalize_to == 0.05
