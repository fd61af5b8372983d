from __future__ import annotations

import logging
import math
import re
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, FrozenSet, List, Optional, Tuple, Type, Union, cast

from .core import PhysicalParams
from .enums import DataKind, FieldSelector, Scheme
from .errors import ConfigParseError, ConfigurationError, InvalidGrid, MicropolarException
from .grid import MAX_DERIVATIVE_ORDER, GridSpec
from .integrator import DataFamily, IntegratorConfig, Probe
from .littlewood_paley import BesovParams
from .utils import format_exponent, parse_exponent
from .verification import AnalysisSamples, DynamicsPreset

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

if TYPE_CHECKING:
    from os import PathLike

    from .types import ConfigDocument

__all__ = (
    'OutputConfig',
    'VerificationConfig',
    'RunConfig',
    'parse_config',
    'load_config',
)

log = logging.getLogger(__name__)

_KEYS: Dict[str, FrozenSet[str]] = {
    'grid': frozenset({'n', 'box_length', 'dealias_fraction'}),
    'params': frozenset({'chi', 'nu', 'kappa', 'mu'}),
    'integrator': frozenset(
        {'scheme', 'dt', 't_end', 'sample_stride', 'dealias', 'nonlinear', 'continuation_window'}
    ),
    'data': frozenset({'kind', 'amplitude', 'normalize_to', 'epsilon', 'shell', 'seed'}),
    'probes': frozenset({'field', 's', 'p', 'q', 'alpha'}),
    'outputs': frozenset({'csv', 'json', 'snapshot_dir', 'snapshot_stride'}),
    'verification': frozenset(
        {
            'samples',
            'green_n',
            'shells',
            'exponents',
            'ledger_exponents',
            'decay_window',
            'boundedness_window',
            'oscillation_exponents',
            'amplification_ceiling',
        }
    ),
    'verification.samples': frozenset(f.name for f in fields(AnalysisSamples)),
}

_LOCATION = re.compile(r'line (\d+), column (\d+)')


@dataclass(frozen=True)
class OutputConfig:
    """Where artifacts are written, relative to the output directory.

    Parameters
    ----------
    csv: str
        The diagnostic series.
    json: str
        The verification report; several reports go to ``<stem>-<suite>.json``.
    snapshot_dir: Optional[str]
        Directory of binary snapshots; ``None`` disables them.
    snapshot_stride: int
        A snapshot is written every ``snapshot_stride`` samples.
    """

    csv: str = 'series.csv'
    json: str = 'report.json'
    snapshot_dir: Optional[str] = None
    snapshot_stride: int = 0


@dataclass(frozen=True)
class VerificationConfig:
    """Sizes and windows of the verification suites."""

    samples: AnalysisSamples = AnalysisSamples()
    green_n: int = 64
    shells: Tuple[int, ...] = (-2, -1, 1, 2, 3)
    exponents: Tuple[float, ...] = (2.0, 4.0, math.inf)
    ledger_exponents: Tuple[float, ...] = (2.0, 4.0)
    decay_window: Tuple[float, float] = (1.0, 50.0)
    boundedness_window: Tuple[float, float] = (10.0, 50.0)
    oscillation_exponents: Tuple[float, ...] = (4.0, 6.0)
    amplification_ceiling: float = 10.0


def _default_probes() -> Tuple[Probe, ...]:
    return (Probe(BesovParams(0.5, 2, math.inf)),)


@dataclass(frozen=True)
class RunConfig:
    """A fully validated experiment description.

    Attributes
    ----------
    explicit: FrozenSet[str]
        The tables the document spelled out.
    """

    grid: GridSpec = GridSpec()
    params: PhysicalParams = PhysicalParams()
    integrator: IntegratorConfig = IntegratorConfig()
    data: DataFamily = DataFamily(DataKind.GAUSSIAN, normalize_to=0.01)
    probes: Tuple[Probe, ...] = field(default_factory=_default_probes)
    outputs: OutputConfig = OutputConfig()
    verification: VerificationConfig = VerificationConfig()
    explicit: FrozenSet[str] = frozenset()

    def dynamics_preset(self) -> DynamicsPreset:
        """The dynamics-suite preset; without an ``[integrator]`` table the run goes to ``t = 50``."""
        v = self.verification
        base = DynamicsPreset.default()
        return DynamicsPreset(
            grid=self.grid,
            integrator=self.integrator if 'integrator' in self.explicit else base.integrator,
            data=self.data,
            exponents=tuple(p for p in v.exponents if math.isfinite(p)) or base.exponents,
            decay_window=v.decay_window,
            boundedness_window=v.boundedness_window,
            oscillation_exponents=v.oscillation_exponents,
            ledger_exponents=v.ledger_exponents,
            amplification_ceiling=v.amplification_ceiling,
        )


class _Reader:
    # reads one table and records every problem instead of raising
    def __init__(self, name: str, table: Any, violations: List[str]) -> None:
        self.name = name
        self.violations = violations
        if table is None:
            table = {}
        if not isinstance(table, dict):
            violations.append(f'[{name}] must be a table')
            table = {}
        self.table: Dict[str, Any] = table
        for key in sorted(set(table) - _KEYS.get(name, _KEYS[name.split('.')[0]])):
            violations.append(f'unknown key {name}.{key}')

    def get(self, key: str, kind: Union[Type, Tuple[Type, ...]], default: Any) -> Any:
        if key not in self.table:
            return default
        value = self.table[key]
        # bool is an int subclass; integers are accepted where floats are
        accepted = (kind,) if isinstance(kind, type) else kind
        if float in accepted and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, bool) and bool not in accepted:
            self._wrong(key, accepted, value)
            return default
        if not isinstance(value, accepted):
            self._wrong(key, accepted, value)
            return default
        return value

    def exponent(self, key: str, default: float) -> float:
        if key not in self.table:
            return default
        try:
            return parse_exponent(self.table[key])
        except (TypeError, ValueError):
            self.violations.append(f'{self.name}.{key} must be an exponent in [1, inf], got {self.table[key]!r}')
            return default

    def exponents(self, key: str, default: Tuple[float, ...]) -> Tuple[float, ...]:
        values = self.get(key, list, None)
        if values is None:
            return default
        out = []
        for value in values:
            try:
                out.append(parse_exponent(value))
            except (TypeError, ValueError):
                self.violations.append(f'{self.name}.{key} entries must be exponents in [1, inf], got {value!r}')
        return tuple(out)

    def window(self, key: str, default: Tuple[float, float]) -> Tuple[float, float]:
        values = self.get(key, list, None)
        if values is None:
            return default
        if len(values) != 2 or not all(isinstance(v, (int, float)) for v in values) or not 0 < values[0] < values[1]:
            self.violations.append(f'{self.name}.{key} must be [start, end] with 0 < start < end, got {values!r}')
            return default
        return float(values[0]), float(values[1])

    def enum(self, key: str, enum: Type, default: Any) -> Any:
        value = self.get(key, str, None)
        if value is None:
            return default
        for member in enum:
            if member.value.lower() == value.lower():
                return member
        choices = ', '.join(m.value for m in enum)
        self.violations.append(f'{self.name}.{key} must be one of {choices}, got {value!r}')
        return default

    def _wrong(self, key: str, accepted: Tuple[Type, ...], value: Any) -> None:
        names = ' or '.join(t.__name__ for t in accepted)
        self.violations.append(f'{self.name}.{key} must be {names}, got {type(value).__name__}')


def _build(factory: Any, violations: List[str], fallback: Any, **kwargs: Any) -> Any:
    try:
        return factory(**kwargs)
    except MicropolarException as exc:
        violations.append(str(exc))
        return fallback


def _parse_probe(index: int, table: Any, violations: List[str]) -> Optional[Probe]:
    r = _Reader(f'probes.{index}', table, violations)
    s = r.get('s', float, 0.5)
    p = r.exponent('p', 2.0)
    q = r.exponent('q', math.inf)
    selector = r.enum('field', FieldSelector, FieldSelector.BOTH)
    alpha = r.get('alpha', list, [0, 0, 0])
    if len(alpha) != 3 or not all(isinstance(a, int) and not isinstance(a, bool) and a >= 0 for a in alpha):
        violations.append(f'probes.{index}.alpha must be three nonnegative integers, got {alpha!r}')
        return None
    if sum(alpha) > MAX_DERIVATIVE_ORDER:
        violations.append(f'probes.{index}.alpha has order {sum(alpha)} above {MAX_DERIVATIVE_ORDER}')
        return None
    return Probe(BesovParams(s, p, q), selector, tuple(alpha))  # type: ignore


def _parse_samples(v: _Reader, violations: List[str]) -> AnalysisSamples:
    # an integer sets every check; a table sets them one by one
    default = AnalysisSamples()
    raw = v.table.get('samples')
    if isinstance(raw, dict):
        r = _Reader('verification.samples', raw, violations)
        samples = AnalysisSamples(**{f.name: r.get(f.name, int, getattr(default, f.name)) for f in fields(default)})
        bad = samples.violations()
        violations.extend(f'verification.{message}' for message in bad)
        return default if bad else samples
    count = v.get('samples', int, None)
    if count is None:
        return default
    if count < 1:
        violations.append('verification.samples must be at least 1')
        return default
    return AnalysisSamples.uniform(count)


def parse_config(text: str, /) -> RunConfig:

    """Parses and validates a TOML experiment description.

    Every key is optional; see :class:`RunConfig` for the defaults.

    Parameters
    ----------
    text: str
        The TOML document.

    Raises
    ------
    ConfigParseError
        The document is not valid TOML; ``line`` and ``column`` locate the error.
    ConfigurationError
        The document violates one or more invariants; all of them are listed.

    Returns
    -------
    :class:`RunConfig`
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = _LOCATION.search(str(exc))
        line, column = (int(match.group(1)), int(match.group(2))) if match else (None, None)
        raise ConfigParseError(f'malformed configuration: {exc}', line=line, column=column) from exc

    doc = cast('ConfigDocument', raw)
    violations: List[str] = []
    for key in sorted(set(doc) - set(_KEYS)):
        violations.append(f'unknown table [{key}]')

    g = _Reader('grid', doc.get('grid'), violations)
    defaults = GridSpec()
    grid = _build(
        GridSpec,
        violations,
        None,
        n=g.get('n', int, defaults.n),
        box_length=g.get('box_length', float, defaults.box_length),
        dealias_fraction=g.get('dealias_fraction', float, defaults.dealias_fraction),
    )

    pr = _Reader('params', doc.get('params'), violations)
    base = PhysicalParams()
    params = _build(
        PhysicalParams,
        violations,
        base,
        chi=pr.get('chi', float, base.chi),
        nu=pr.get('nu', float, base.nu),
        kappa=pr.get('kappa', float, base.kappa),
        mu=pr.get('mu', float, base.mu),
    )

    it = _Reader('integrator', doc.get('integrator'), violations)
    stepping = IntegratorConfig()
    integrator = IntegratorConfig(
        dt=it.get('dt', float, stepping.dt),
        t_end=it.get('t_end', float, stepping.t_end),
        scheme=it.enum('scheme', Scheme, stepping.scheme),
        sample_stride=it.get('sample_stride', int, stepping.sample_stride),
        dealias=it.get('dealias', bool, stepping.dealias),
        nonlinear=it.get('nonlinear', bool, stepping.nonlinear),
        continuation_window=it.get('continuation_window', float, stepping.continuation_window),
    )
    violations.extend(integrator.violations(grid))
    if integrator.scheme is not Scheme.REF_RK4 and not params.is_default:
        violations.append('exponential schemes need the default params; use scheme = "REF_RK4"')

    d = _Reader('data', doc.get('data'), violations)
    kind = d.enum('kind', DataKind, DataKind.GAUSSIAN)
    data = DataFamily(
        kind=kind,
        amplitude=d.get('amplitude', float, 1.0),
        # an explicit amplitude replaces the default normalisation
        normalize_to=d.get('normalize_to', float, None if 'amplitude' in d.table else 0.01),
        epsilon=d.get('epsilon', float, None),
        shell=d.get('shell', int, None),
        seed=d.get('seed', int, 0),
    )
    if grid is not None:
        violations.extend(data.violations(grid))

    probes: Tuple[Probe, ...] = _default_probes()
    if 'probes' in doc:
        entries = doc['probes']
        if not isinstance(entries, list):
            violations.append('[[probes]] must be an array of tables')
        else:
            parsed = [_parse_probe(i, entry, violations) for i, entry in enumerate(entries)]
            probes = tuple(p for p in parsed if p is not None)
            names = [p.name for p in probes]
            for name in sorted({n for n in names if names.count(n) > 1}):
                violations.append(f'duplicate probe {name}')

    o = _Reader('outputs', doc.get('outputs'), violations)
    outputs = OutputConfig(
        csv=o.get('csv', str, 'series.csv'),
        json=o.get('json', str, 'report.json'),
        snapshot_dir=o.get('snapshot_dir', str, None),
        snapshot_stride=o.get('snapshot_stride', int, 0),
    )
    if outputs.snapshot_stride < 0:
        violations.append('outputs.snapshot_stride must be nonnegative')
    if outputs.snapshot_dir is not None and outputs.snapshot_stride == 0:
        violations.append('outputs.snapshot_dir needs a positive outputs.snapshot_stride')

    v = _Reader('verification', doc.get('verification'), violations)
    checks = VerificationConfig()
    verification = VerificationConfig(
        samples=_parse_samples(v, violations),

        green_n=v.get('green_n', int, checks.green_n),
        shells=tuple(v.get('shells', list, list(checks.shells))),
        exponents=v.exponents('exponents', checks.exponents),
        ledger_exponents=v.exponents('ledger_exponents', checks.ledger_exponents),
        decay_window=v.window('decay_window', checks.decay_window),
        boundedness_window=v.window('boundedness_window', checks.boundedness_window),
        oscillation_exponents=v.exponents('oscillation_exponents', checks.oscillation_exponents),
        amplification_ceiling=v.get('amplification_ceiling', float, checks.amplification_ceiling),
    )
    if not all(isinstance(j, int) and not isinstance(j, bool) for j in verification.shells):
        violations.append('verification.shells must be integers')
    try:
        GridSpec(n=verification.green_n)
    except InvalidGrid as exc:
        violations.append(f'verification.green_n: {exc}')
    if any(p <= 3 for p in verification.oscillation_exponents):
        violations.append('verification.oscillation_exponents must exceed 3')

    if violations:
        log.debug(f'configuration rejected with {len(violations)} violation(s)')
        raise ConfigurationError(violations)

    explicit = frozenset(key for key in doc if key in _KEYS)
    cfg = RunConfig(grid, params, integrator, data, probes, outputs, verification, explicit)
    log.debug(
        f'configuration: {grid!r}, {integrator.scheme.value}, data {data.kind.value}, '
        f'probes {[p.name for p in probes]}, exponents {[format_exponent(p) for p in verification.exponents]}'
    )
    return cfg


def load_config(path: Union[str, PathLike], /) -> RunConfig:
    """Reads and parses a TOML file; see :func:`parse_config`."""
    return parse_config(Path(path).read_text(encoding='utf-8'))
