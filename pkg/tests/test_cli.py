import csv

import pytest

from micropolar import (
    BlowUp,
    ConfigurationError,
    ExitStatus,
    RunConfig,
    RunResult,
    VerificationReport,
    execute,
    from_json,
    main,
    parse_config,
    write_outputs,
)

SMALL = '''
[grid]
n = 16
box_length = 6.283185307179586

[integrator]
dt = 0.05
t_end = 0.2

[outputs]
snapshot_dir = "snaps"
snapshot_stride = 2
'''

UNREACHABLE = '''
[grid]
n = 16

[integrator]
dt = 0.1
t_end = 0.4

[verification]
decay_window = [0.1, 0.4]
boundedness_window = [0.2, 0.4]
amplification_ceiling = 0.5
'''


def _rows(path) -> list:
    with open(path, newline='', encoding='utf-8') as f:
        return list(csv.reader(f))


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / 'small.toml'
    path.write_text(SMALL, encoding='utf-8')
    return path


@pytest.mark.usefixtures('threads')
class TestMain:
    def test_simulate_then_norms(self, tmp_path, small_config):
        out = tmp_path / 'out'
        argv = ['simulate', '--config', str(small_config), '--out-dir', str(out), '--seed', '3', '--threads', '1']
        assert main(argv) == ExitStatus.OK

        header, *rows = _rows(out / 'series.csv')
        assert header == ['t', 'both_s0.5_p2_qinf', 'energy', 'div_residual', 'continuation']
        assert len(rows) == 5
        assert float(rows[0][0]) == 0.0
        assert float(rows[-1][2]) < float(rows[0][2])
        snapshots = sorted(p.name for p in (out / 'snaps').iterdir())
        assert snapshots == ['state-000000.mpsf', 'state-000001.mpsf', 'state-000002.mpsf']

        argv = ['norms', '--config', str(small_config), '--out-dir', str(tmp_path / 'norms')]
        argv += ['--snapshot', str(out / 'snaps' / 'state-000000.mpsf')]
        assert main(argv) == ExitStatus.OK
        header, row = _rows(tmp_path / 'norms' / 'series.csv')
        assert header == ['both_s0.5_p2_qinf', 'energy', 'div_residual']
        assert float(row[1]) == pytest.approx(float(rows[0][2]), rel=1e-12)

    def test_norms_needs_a_snapshot(self, tmp_path, small_config):
        assert main(['norms', '--config', str(small_config), '--out-dir', str(tmp_path)]) == ExitStatus.ERROR

    def test_invalid_config(self, tmp_path):
        path = tmp_path / 'bad.toml'
        path.write_text('[grid]\nn = 24\n', encoding='utf-8')
        assert main(['simulate', '--config', str(path), '--out-dir', str(tmp_path)]) == ExitStatus.ERROR
        assert not (tmp_path / 'series.csv').exists()

    def test_malformed_config(self, tmp_path):
        path = tmp_path / 'bad.toml'
        path.write_text('[grid\n', encoding='utf-8')
        assert main(['simulate', '--config', str(path)]) == ExitStatus.ERROR

    def test_missing_config(self, tmp_path):
        assert main(['simulate', '--config', str(tmp_path / 'absent.toml')]) == ExitStatus.ERROR

    def test_failed_checks(self, tmp_path):
        path = tmp_path / 'strict.toml'
        path.write_text(UNREACHABLE, encoding='utf-8')
        assert main(['verify-dynamics', '--config', str(path), '--out-dir', str(tmp_path)]) == ExitStatus.FAILED
        report = from_json((tmp_path / 'report.json').read_text(encoding='utf-8'))
        assert report['suite'] == 'verify-dynamics'
        assert report['env']['seed'] == 0
        assert any(c['verdict'] == 'fail' and c['anchor'] == 'boundedness' for c in report['checks'])

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            main(['integrate'])


class TestOutputs:
    def test_report_naming(self, tmp_path):
        cfg = parse_config('[outputs]\njson = "checks.json"\ncsv = "run.csv"\n')
        series = RunResult(times=[0.0], energy=[1.0], div_residual=[0.0], continuation=[0.0])
        reports = [VerificationReport('verify-a'), VerificationReport('verify-b')]
        written = write_outputs(series, reports, cfg, tmp_path)
        assert [p.name for p in written] == ['run.csv', 'checks-verify-a.json', 'checks-verify-b.json']
        assert _rows(tmp_path / 'run.csv') == [['t', 'energy', 'div_residual', 'continuation'], ['0', '1', '0', '0']]

    def test_single_report(self, tmp_path):
        written = write_outputs(None, [VerificationReport('verify-a')], RunConfig(), tmp_path)
        assert written == [tmp_path / 'report.json']
        assert from_json(written[0].read_text(encoding='utf-8')) == {'suite': 'verify-a', 'checks': [], 'env': {}}

    def test_execute_accepts_names(self):
        with pytest.raises(ConfigurationError):
            execute(RunConfig(), 'norms')
        with pytest.raises(ValueError):
            execute(RunConfig(), 'integrate')

    def test_blow_up_survives_a_failed_snapshot(self, tmp_path, monkeypatch):
        (tmp_path / 'blocked').write_text('not a directory', encoding='utf-8')
        cfg = parse_config(SMALL.replace('snapshot_dir = "snaps"', 'snapshot_dir = "blocked/snaps"'))
        partial = RunResult(times=[0.0], energy=[1.0], div_residual=[0.0], continuation=[0.0])

        def exploding_run(s0, cfg, probes=(), /, *, snapshot_sink=None, **kwargs):
            snapshot_sink(s0)
            raise BlowUp(0.1, 2, partial)

        monkeypatch.setattr('micropolar.cli.run', exploding_run)
        with pytest.raises(BlowUp) as info:
            execute(cfg, 'simulate', out_dir=tmp_path)
        assert info.value.shell == 2
        assert _rows(tmp_path / 'series.csv')[1] == ['0', '1', '0', '0']
