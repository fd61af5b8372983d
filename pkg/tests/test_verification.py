import math
from dataclasses import replace

import numpy as np
import pytest

from micropolar import (
    AnalysisSamples,
    DynamicsPreset,
    GridSpec,
    InsufficientSamples,
    IntegratorConfig,
    TimeSeries,
    Verdict,
    VerificationReport,
    continuation_monitor,
    from_json,
    oscillation_ladder,
    random_vector,
    to_json,
    verify_analysis_suite,
    verify_dynamics_suite,
    verify_green_suite,
)
from micropolar.verification import _env


def _anchors(report: VerificationReport) -> set:
    return {check.anchor for check in report.checks}


def _check(report: VerificationReport, anchor: str, name: str):
    return next(c for c in report.checks if c.anchor == anchor and c.name.startswith(name))


class TestReport:
    def test_verdicts(self):
        report = VerificationReport('verify-test')
        assert report.passed and len(report) == 0
        assert report.record('plumbing', 'ok', 1.0, 2.0, True).verdict is Verdict.PASS
        assert report.record('plumbing', 'info', [1.0, 2.0], None, None).verdict is Verdict.REPORT
        assert report.passed
        failed = report.record('plumbing', 'bad', 3.0, 2.0, False)
        assert not report.passed
        assert report.failures == [failed]

    def test_payload(self):
        report = VerificationReport('verify-test', env={'seed': 3})
        report.record('decay', 'slope', {'raw_slope': -0.5, 'C0': math.inf}, 0.15, True)
        payload = from_json(to_json(report.to_payload()))
        assert payload['suite'] == 'verify-test'
        assert payload['env'] == {'seed': 3}
        (check,) = payload['checks']
        assert check == {
            'anchor': 'decay',
            'name': 'slope',
            'measured': {'raw_slope': -0.5, 'C0': 'inf'},
            'tolerance': 0.15,
            'verdict': 'pass',
        }
        assert to_json(report) == to_json(report.to_payload())

    @pytest.mark.parametrize('grid', [None, GridSpec(16, 2 * math.pi)])
    def test_payload_ignores_the_thread_count(self, monkeypatch, grid):
        texts = []
        for threads in ('1', '2'):
            monkeypatch.setenv('MICROPOLAR_THREADS', threads)
            report = VerificationReport('verify-analysis', env=_env(grid, 0, shells=[1, 2]))
            report.record('plumbing', 'ok', 1.0, 2.0, True)
            texts.append(to_json(report))
        assert texts[0] == texts[1]
        assert 'threads' not in from_json(texts[0])['env']


class TestHelpers:
    def test_oscillation_ladder_sits_on_the_lattice(self):
        grid = GridSpec(64, 16 * math.pi)
        ladder = oscillation_ladder(grid, margin=2.0)
        assert len(ladder) == 5
        assert ladder == sorted(ladder, reverse=True)
        for eps in ladder:
            multiple = 1 / eps / grid.unit
            assert multiple == pytest.approx(round(multiple), abs=1e-9)
            assert 1 / eps <= grid.cutoff

    def test_oscillation_ladder_needs_room(self, grid16):
        with pytest.raises(InsufficientSamples):
            oscillation_ladder(grid16)

    def test_continuation_monitor(self, grid16, rng):
        u = random_vector(grid16, rng, solenoidal=True)
        series = TimeSeries((0.0, 1.0, 2.0), (u, u, u))
        whole = continuation_monitor(series, 10.0)
        half = continuation_monitor(series, 1.0)
        assert whole == pytest.approx(2 * half)
        assert whole > 0
        with pytest.raises(InsufficientSamples):
            continuation_monitor(series, 0.5)
        with pytest.raises(InsufficientSamples):
            continuation_monitor(TimeSeries((0.0,), (u,)), 10.0)

    def test_analysis_samples(self):
        default = AnalysisSamples()
        assert (default.products, default.interpolation, default.besov_l2, default.bernstein) == (200, 100, 100, 50)
        assert default.violations() == []
        assert AnalysisSamples.uniform(0).violations()[0] == 'samples.bony must be at least 1'
        assert default.per_shell(200, [1, 2, 3]) == 67
        assert default.per_shell(200, []) == 200

    def test_presets(self):
        default = DynamicsPreset.default()
        assert default.grid == GridSpec(128, 32 * math.pi)
        assert default.integrator.t_end == 50.0
        quick = DynamicsPreset.quick()
        assert quick.integrator.t_end == 4.0
        names = [probe.name for probe in quick.probes()]
        assert len(names) == len(set(names)) == 6
        assert 'both_s0.5_p2_qinf' in names


class TestSuites:
    def test_dynamics(self):
        preset = replace(
            DynamicsPreset.quick(),
            integrator=IntegratorConfig(dt=0.1, t_end=1.0, sample_stride=2),
            decay_window=(0.2, 1.0),
            boundedness_window=(0.4, 1.0),
        )
        report = verify_dynamics_suite(preset, 1)
        assert report.suite == 'verify-dynamics'
        assert report.env['seed'] == 1
        assert {'boundedness', 'decay', 'oscillation-scaling', 'a-priori-ledger', 'continuation'} <= _anchors(report)
        assert _check(report, 'plumbing', 'max divergence residual').verdict is Verdict.PASS
        assert _check(report, 'energy-inequality', 'largest energy').verdict is Verdict.PASS
        assert all(c.verdict is Verdict.REPORT for c in report.checks if c.anchor == 'a-priori-ledger')
        from_json(to_json(report.to_payload()))

    def test_analysis(self, grid32):
        report = verify_analysis_suite(grid32, 0, samples=AnalysisSamples.uniform(1))
        assert report.suite == 'verify-analysis'
        for anchor in ('partition-of-unity', 'orthogonality', 'bony', 'interpolation', 'besov-l2-equivalence'):
            assert all(c.verdict is Verdict.PASS for c in report.checks if c.anchor == anchor), anchor
        assert {'bernstein', 'reverse-bernstein', 'product-law', 'heat-maximal-regularity'} <= _anchors(report)
        assert report.env['shells'] == [1, 2, 3]
        assert report.env['samples']['products'] == 1
        for anchor in ('paraproduct', 'remainder'):
            check = _check(report, anchor, '||')
            assert set(check.measured) == {'C', 'spread', 'per_shell'}
            assert check.measured['per_shell'] and check.measured['C'] > 0

    def test_besov_l2_equivalence_holds_for_many_fields(self, grid32):
        report = verify_analysis_suite(grid32, 3, samples=replace(AnalysisSamples.uniform(1), besov_l2=100))
        check = _check(report, 'besov-l2-equivalence', 'B^0')
        assert check.verdict is Verdict.PASS
        assert 1 / math.sqrt(2) - 1e-12 <= check.measured['min'] <= check.measured['max'] <= 1 + 1e-12


    def test_green(self):
        report = verify_green_suite(
            0, green_n=32, shells=(-1, 1), exponents=(2, 'inf'), samples=10, smoothing_samples=1, scan_points=8
        )
        assert report.suite == 'verify-green'
        for anchor in (
            'reduced-green-closed-form',
            'reduced-green-ode',
            'reduced-green-eigenvalues',
            'reduced-green-semigroup',
            'full-green-identity',
            'full-green-expm',
            'full-green-gradient-mode',
            'full-vs-reduced',
        ):
            checks = [c for c in report.checks if c.anchor == anchor]
            assert checks and all(c.verdict is Verdict.PASS for c in checks), anchor
        contrast = _check(report, 'full-green-lp-contrast', 'untransformed')
        assert contrast.verdict is Verdict.REPORT
        assert len([c for c in report.checks if c.anchor == 'reduced-green-lp-smoothing']) == 2
        assert np.isfinite(_check(report, 'reduced-green-lp-smoothing', 'p=2').measured['c'])
