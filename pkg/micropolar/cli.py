from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional, Sequence, Union

from .config import RunConfig, load_config
from .core import divergence_residual, energy
from .enums import ExitStatus, Subcommand
from .errors import BlowUp, ConfigurationError, MicropolarException, OutputError
from .integrator import RunResult, make_initial_data, run
from .snapshot import SnapshotWriter, read_snapshot
from .utils import atomic_write, to_json
from .verification import (
    VerificationReport,
    verify_analysis_suite,
    verify_dynamics_suite,
    verify_green_suite,
)

if TYPE_CHECKING:
    from os import PathLike

__all__ = ('execute', 'write_outputs', 'main')

log = logging.getLogger(__name__)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[float]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(float(v), '.17g') for v in row])
    return buffer.getvalue()


def write_outputs(
    series: Optional[RunResult],
    reports: Sequence[VerificationReport],
    cfg: RunConfig,
    out_dir: Union[str, PathLike] = '.',
    /,
) -> List[Path]:
    """Writes the diagnostic CSV and the JSON reports, each atomically.

    The CSV header is ``t,<probe names...>,energy,div_residual,continuation`` with one
    row per sample. A single report goes to ``outputs.json``; several reports go to
    ``<stem>-<suite>.json`` beside it.

    Raises
    ------
    OutputError
        A file could not be written.

    Returns
    -------
    List[:class:`pathlib.Path`]
        The files written.
    """
    root = Path(out_dir)
    written = []
    if series is not None:
        written.append(atomic_write(root / cfg.outputs.csv, _csv_text(series.columns, series.rows())))

    target = root / cfg.outputs.json
    for report in reports:
        path = target if len(reports) == 1 else target.with_name(f'{target.stem}-{report.suite}{target.suffix}')
        written.append(atomic_write(path, to_json(report.to_payload()) + '\n'))

    for path in written:
        log.info(f'wrote {path}')
    return written


def _simulate(cfg: RunConfig, out_dir: Path, seed: Optional[int]) -> ExitStatus:
    data = cfg.data if seed is None else replace(cfg.data, seed=seed)
    s0 = make_initial_data(data, cfg.grid)

    writer = None
    if cfg.outputs.snapshot_dir is not None:
        writer = SnapshotWriter(out_dir / cfg.outputs.snapshot_dir)
    try:
        result = run(
            s0,
            cfg.integrator,
            cfg.probes,
            params=cfg.params,
            snapshot_sink=writer,
            snapshot_stride=cfg.outputs.snapshot_stride,
        )
    except BlowUp as exc:
        if writer is not None:
            try:
                writer.close()
            except OutputError as close_error:
                log.error(f'snapshot writes failed before the blow-up: {close_error}')
        if isinstance(exc.partial, RunResult):
            write_outputs(exc.partial, (), cfg, out_dir)
        raise
    finally:
        if writer is not None:
            writer.close()

    write_outputs(result, (), cfg, out_dir)
    return ExitStatus.OK


def _norms(cfg: RunConfig, out_dir: Path, snapshot: Optional[Union[str, PathLike]]) -> ExitStatus:
    if snapshot is None:
        raise ConfigurationError(['the norms subcommand needs --snapshot PATH'])
    state = read_snapshot(snapshot)
    header = [probe.name for probe in cfg.probes] + ['energy', 'div_residual']
    row = [probe.evaluate(state) for probe in cfg.probes] + [energy(state), divergence_residual(state.u)]
    path = atomic_write(out_dir / cfg.outputs.csv, _csv_text(header, [row]))
    log.info(f'wrote {path}')
    return ExitStatus.OK


def execute(
    cfg: RunConfig,
    subcommand: Union[Subcommand, str],
    /,
    *,
    seed: Optional[int] = None,
    out_dir: Union[str, PathLike] = '.',
    snapshot: Optional[Union[str, PathLike]] = None,
) -> ExitStatus:
    """Runs one subcommand and writes its artifacts.

    Parameters
    ----------
    cfg: :class:`RunConfig`
        A validated configuration.
    subcommand: Union[:class:`Subcommand`, str]
        What to run.
    seed: Optional[int]
        Seed of the suites and of ``SHELL_RANDOM`` data; the suites default to zero.
    out_dir: Union[str, PathLike]
        Directory the output paths are relative to.
    snapshot: Optional[Union[str, PathLike]]
        Snapshot read by ``norms``.

    Raises
    ------
    MicropolarException
        Any runtime failure; a blow-up during ``simulate`` first flushes the partial series.

    Returns
    -------
    :class:`ExitStatus`
        ``OK`` when every verdict passed, ``FAILED`` otherwise.
    """
    command = Subcommand(subcommand)
    root = Path(out_dir)
    log.info(f'{command.value} on {cfg.grid!r}')

    if command is Subcommand.SIMULATE:
        return _simulate(cfg, root, seed)
    if command is Subcommand.NORMS:
        return _norms(cfg, root, snapshot)

    v = cfg.verification
    suite_seed = 0 if seed is None else seed
    if command is Subcommand.VERIFY_ANALYSIS:
        report = verify_analysis_suite(cfg.grid, suite_seed, samples=v.samples)
    elif command is Subcommand.VERIFY_GREEN:
        report = verify_green_suite(suite_seed, green_n=v.green_n, shells=v.shells, exponents=v.exponents)
    else:
        report = verify_dynamics_suite(cfg.dynamics_preset(), suite_seed)

    write_outputs(None, (report,), cfg, root)
    failed = report.failures
    if failed:
        log.warning(f'{len(failed)} of {len(report)} checks failed')
        return ExitStatus.FAILED
    return ExitStatus.OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='micropolar', description='Pseudospectral verification lab for the micropolar fluid system.'
    )
    parser.add_argument('subcommand', choices=[c.value for c in Subcommand])
    parser.add_argument('--config', type=Path, help='TOML configuration; defaults apply without one')
    parser.add_argument('--seed', type=int, default=None)
    parser.add_argument('--out-dir', type=Path, default=Path('.'))
    parser.add_argument('--snapshot', type=Path, default=None, help='snapshot read by the norms subcommand')
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    parser.add_argument('--threads', type=int, default=None, help='caps the FFT worker count')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)

    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter('%(asctime)s %(levelname)s %(name)s: %(message)s'))
    root = logging.getLogger()
    root.addHandler(handler)
    root.setLevel(args.log_level)

    if args.threads is not None:
        os.environ['MICROPOLAR_THREADS'] = str(max(1, args.threads))

    try:
        cfg = load_config(args.config) if args.config is not None else RunConfig()
        status = execute(cfg, args.subcommand, seed=args.seed, out_dir=args.out_dir, snapshot=args.snapshot)
    except ConfigurationError as exc:
        for violation in exc.violations:
            log.error(f'configuration: {violation}')
        status = ExitStatus.ERROR
    except (MicropolarException, OSError) as exc:
        log.error(f'{type(exc).__name__}: {exc}')
        status = ExitStatus.ERROR
    finally:
        root.removeHandler(handler)

    return int(status)


if __name__ == '__main__':
    sys.exit(main())
