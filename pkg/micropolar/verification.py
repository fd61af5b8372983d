"""Executable suites that bind each quantitative estimate to a measured number.

Every suite returns a :class:`VerificationReport`. Checks whose constants are only
known to exist are fitted and judged by their stability across scales; identities
are judged against fixed tolerances. Records with a :attr:`Verdict.REPORT` verdict
carry information only and never fail a suite.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm as scipy_expm

from .core import State, energy, transform
from .enums import DataKind, FieldSelector, Verdict
from .errors import BlowUp, InsufficientSamples
from .green import (
    FullGreen,
    ReducedGreen,
    apply_full_green,
    apply_reduced_green,
    apply_semigroups,
    log_grid,
    reduced_green_eval,
    scan_derivative_bounds,
)
from .grid import (
    GridSpec,
    ScalarField,
    VectorField,
    curl,
    dealiased_product,
    fft_workers,
    random_scalar,
    random_vector,
)
from .integrator import (
    DataFamily,
    IntegratorConfig,
    Probe,
    RunResult,
    continuation_from_shells,
    make_initial_data,
    run,
)
from .littlewood_paley import (
    PRODUCT_LAWS,
    BesovParams,
    TimeSeries,
    besov_from_shells,
    besov_norm,
    bernstein_ratio,
    bony_decompose,
    chemin_lerner_from_shells,
    damped_heat_evolve,
    decomposition,
    interpolation_gap,
    lebesgue_norm,
    paraproduct_ratio,
    plateau_field,
    poincare_ratio,
    product_ratio,
    remainder_ratio,
    reverse_bernstein_ratio,
    shell_field,
    shell_kernel,
    shell_norms,
)
from .utils import fit_line, format_exponent, loglog_slope, parse_exponent

if TYPE_CHECKING:
    from .types import CheckPayload, Exponent, Measured, ReportPayload

__all__ = (
    'CheckRecord',
    'VerificationReport',
    'AnalysisSamples',
    'DynamicsPreset',
    'oscillation_ladder',
    'continuation_monitor',
    'verify_analysis_suite',
    'verify_green_suite',
    'verify_dynamics_suite',
)

log = logging.getLogger(__name__)

INF = math.inf


@dataclass
class CheckRecord:
    """One measured quantity and its verdict.

    Attributes
    ----------
    anchor: str
        The estimate the check exercises, or ``'plumbing'``.
    name: str
        What was measured.
    measured: Union[float, int, bool, str, None, List[float], dict]
    tolerance: Union[float, str, None]
    verdict: :class:`Verdict`
    """

    anchor: str
    name: str
    measured: Measured
    tolerance: Union[float, str, None]
    verdict: Verdict

    def to_payload(self) -> CheckPayload:
        return {
            'anchor': self.anchor,
            'name': self.name,
            'measured': self.measured,
            'tolerance': self.tolerance,
            'verdict': self.verdict.value,
        }


@dataclass
class VerificationReport:
    """The records of one suite run, plus the environment they were measured in."""

    suite: str
    checks: List[CheckRecord] = field(default_factory=list)
    env: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """bool: Whether no record failed."""
        return all(c.verdict is not Verdict.FAIL for c in self.checks)

    @property
    def failures(self) -> List[CheckRecord]:
        return [c for c in self.checks if c.verdict is Verdict.FAIL]

    def record(
        self,
        anchor: str,
        name: str,
        measured: Measured,
        tolerance: Union[float, str, None],
        ok: Optional[bool],
    ) -> CheckRecord:
        """Appends a record; ``ok=None`` makes it informational."""
        verdict = Verdict.REPORT if ok is None else (Verdict.PASS if ok else Verdict.FAIL)
        check = CheckRecord(anchor, name, measured, tolerance, verdict)
        self.checks.append(check)
        if verdict is Verdict.FAIL:
            log.warning(f'[{self.suite}] FAIL {anchor}: {name} measured={measured!r} tolerance={tolerance!r}')
        else:
            log.info(f'[{self.suite}] {verdict.value} {anchor}: {name}')
        return check

    def to_payload(self) -> ReportPayload:
        return {
            'suite': self.suite,
            'checks': [c.to_payload() for c in self.checks],
            'env': dict(self.env),
        }

    def __len__(self) -> int:
        return len(self.checks)


def _finite(values: Iterable[float]) -> bool:
    return all(math.isfinite(v) for v in values)


def _spread(values: Sequence[float]) -> float:
    top = max(values)
    if top <= 0:
        return INF
    return (top - min(values)) / top


def _env(grid: Optional[GridSpec], seed: int, **extra: Any) -> Dict[str, Any]:
    # reports never record the FFT worker count
    log.debug(f'report env for seed {seed}, {fft_workers()} FFT workers')
    env: Dict[str, Any] = {'seed': seed}
    if grid is not None:
        env['n'] = grid.n
        env['box_length'] = grid.box_length
    env.update(extra)
    return env


def _middle_shells(shells: Sequence[int], count: int = 3) -> List[int]:
    shells = list(shells)
    if len(shells) <= count:
        return shells
    if len(shells) >= count + 2:
        shells = shells[1:-1]
    start = (len(shells) - count) // 2
    return shells[start:start + count]


# analysis


@dataclass(frozen=True)
class AnalysisSamples:
    """Random draws behind each check of :func:`verify_analysis_suite`.

    Attributes
    ----------
    bony: int
        Pairs with nonzero means checked against Bony's decomposition.
    bernstein: int
        Shell-localised fields per shell, shared by the Bernstein, reverse-Bernstein
        and shell-Poincaré checks; the shell kernel is always added.
    interpolation: int
        Fields behind the log-convexity gap, cycling through three interpolation weights.
    besov_l2: int
        Fields behind the ``Ḃ^0_{2,2}`` against ``L²`` comparison.
    products: int
        Pairs per product law, split evenly across the product shells.
    paraproducts: int
        Pairs behind the paraproduct and the remainder checks, split the same way.
    """

    bony: int = 20
    bernstein: int = 50
    interpolation: int = 100
    besov_l2: int = 100
    products: int = 200
    paraproducts: int = 200

    @classmethod
    def uniform(cls, count: int, /) -> AnalysisSamples:
        """The same count for every check."""
        return cls(**{f.name: count for f in fields(cls)})

    def violations(self) -> List[str]:
        return [f'samples.{f.name} must be at least 1' for f in fields(self) if getattr(self, f.name) < 1]

    def per_shell(self, total: int, shells: Sequence[int], /) -> int:
        return max(1, math.ceil(total / max(1, len(shells))))



def _stability_record(
    report: VerificationReport, anchor: str, name: str, per_shell: Dict[int, float], tolerance: float
) -> None:
    values = list(per_shell.values())
    spread = _spread(values) if values else INF
    measured = {
        'C': max(values) if values else None,
        'spread': spread,
        'per_shell': {str(j): v for j, v in per_shell.items()},
    }
    report.record(anchor, name, measured, tolerance, _finite(values) and bool(values) and spread <= tolerance)


def _check_besov_l2(report: VerificationReport, grid: GridSpec, rng: np.random.Generator, count: int) -> None:
    # fields inside the band where the resolved shells sum to one
    band = decomposition(grid).covered_mask().astype(float)
    ratios = []
    for _ in range(count):
        f = random_scalar(grid, rng, band=band)
        ratios.append(besov_norm(f, BesovParams(0, 2, 2)) / f.norm_l2())
    lo, hi = 1 / math.sqrt(3), math.sqrt(3)
    report.record(
        'besov-l2-equivalence',
        'B^0_{2,2} / L^2 over banded fields',
        {'min': min(ratios), 'max': max(ratios), 'bounds': [lo, hi]},
        '[1/sqrt(3), sqrt(3)]',
        _finite(ratios) and lo <= min(ratios) and max(ratios) <= hi,
    )


def _series_shell_norms(series: TimeSeries[ScalarField], shells: Sequence[int]) -> np.ndarray:
    return np.stack([shell_norms(sample, 2, shells=shells) for sample in series.samples])


def _check_heat_regularity(report: VerificationReport, rng: np.random.Generator, tolerance: float) -> None:
    # plateau data at shell j stays below the cutoff while 2^{j+1} does
    grid = GridSpec(64, 2 * math.pi)
    resolved = list(decomposition(grid).resolved_shells())
    shells = [j for j in resolved if 2.0 ** (j + 1) <= grid.cutoff]
    s = 0.5
    unit_times = np.concatenate([[0.0], np.geomspace(1e-4, 1.0, 63)])
    exponents = (1.0, 2.0, INF)

    free: Dict[float, Dict[int, float]] = {r: {} for r in exponents}
    forced: Dict[float, Dict[int, float]] = {r: {} for r in exponents}
    for j in shells:
        horizon = 8.0 / 4.0**j
        times = horizon * unit_times
        u0 = plateau_field(grid, j, rng)
        f = plateau_field(grid, j, rng)
        free_norms = _series_shell_norms(damped_heat_evolve(u0, times), resolved)
        forced_norms = _series_shell_norms(damped_heat_evolve(ScalarField.zeros(grid), times, forcing=f), resolved)
        u0_norm = besov_norm(u0, BesovParams(s, 2, INF))
        f_norm = horizon * besov_norm(f, BesovParams(s, 2, INF))
        for r in exponents:
            index = s + (0.0 if math.isinf(r) else 2 / r)
            free[r][j] = chemin_lerner_from_shells(times, free_norms, resolved, r, index, INF) / u0_norm
            forced[r][j] = chemin_lerner_from_shells(times, forced_norms, resolved, r, index, INF) / f_norm

    for r in exponents:
        label = format_exponent(r)
        _stability_record(report, 'heat-maximal-regularity', f'free flow, r={label}', free[r], tolerance)
        _stability_record(report, 'heat-maximal-regularity', f'forced flow, r={label}', forced[r], tolerance)


def verify_analysis_suite(
    grid: GridSpec = GridSpec(),
    seed: int = 0,
    /,
    *,
    samples: AnalysisSamples = AnalysisSamples(),
    tolerance: float = 0.2,
) -> VerificationReport:
    """Runs the Littlewood-Paley toolbox checks and the damped-heat regularity check.

    Parameters
    ----------
    grid: :class:`GridSpec`
        Grid of the toolbox checks.
    seed: int
        Seed of every random field.
    samples: :class:`AnalysisSamples`
        Random draws per check.
    tolerance: float
        Largest relative spread of a fitted constant across shells.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    dyadic = decomposition(grid)
    resolved = list(dyadic.resolved_shells())
    shells = _middle_shells(resolved)
    report = VerificationReport('verify-analysis', env=_env(grid, seed, shells=shells, samples=asdict(samples)))
    log.info(f'analysis suite on {grid!r}, shells {shells}')

    defect = dyadic.partition_defect()
    report.record('partition-of-unity', 'max |sum_j phi_j - 1|', defect, 1e-8, defect <= 1e-8)

    overlap = max(
        (
            float(np.max(dyadic.shell_multiplier(j) * dyadic.shell_multiplier(k)))
            for j in dyadic.active
            for k in dyadic.active
            if k - j >= 2
        ),
        default=0.0,
    )
    report.record('orthogonality', 'max |phi_j phi_k| for |j - k| >= 2', overlap, 1e-14, overlap <= 1e-14)

    # bony's decomposition, with nonzero means
    worst = 0.0
    for _ in range(samples.bony):
        f = random_scalar(grid, rng)
        g = random_scalar(grid, rng)
        f = f.with_modes(f.modes + _mean_modes(grid, rng.standard_normal()))
        g = g.with_modes(g.modes + _mean_modes(grid, rng.standard_normal()))
        tfg, tgf, rem = bony_decompose(f, g)
        rhs = (tfg + tgf + rem).modes.copy()
        rhs[0, 0, 0] += f.modes[0, 0, 0] * g.modes[0, 0, 0]
        lhs = dealiased_product(f, g).modes
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs))))
    report.record('bony', 'relative error of fg = T_f g + T_g f + R + f0 g0', worst, 1e-8, worst <= 1e-8)

    localised = {
        j: [shell_kernel(grid, j)] + [shell_field(grid, j, rng) for _ in range(samples.bernstein)] for j in shells
    }

    for p, q in ((2.0, 2.0), (2.0, 4.0), (2.0, INF), (4.0, 4.0), (4.0, INF), (INF, INF)):
        for gamma in ((0, 0, 0), (1, 0, 0), (1, 1, 0)):
            per_shell = {j: max(bernstein_ratio(f, j, gamma, p, q) for f in localised[j]) for j in shells}
            name = f'p={format_exponent(p)} q={format_exponent(q)} gamma={list(gamma)}'
            _stability_record(report, 'bernstein', name, per_shell, tolerance)

    for order in (1, 2):
        for p in (2.0, 4.0, INF):
            per_shell = {j: max(reverse_bernstein_ratio(f, j, order, p) for f in localised[j]) for j in shells}
            name = f'order={order} p={format_exponent(p)}'
            _stability_record(report, 'reverse-bernstein', name, per_shell, tolerance)

    for p in (2.0, 4.0):
        per_shell = {j: min(poincare_ratio(f, j, p) for f in localised[j]) for j in shells}
        values = list(per_shell.values())
        spread = _spread(values)
        report.record(
            'shell-poincare',
            f'p={format_exponent(p)}',
            {'c': min(values), 'spread': spread, 'per_shell': {str(j): v for j, v in per_shell.items()}},
            tolerance,
            min(values) > 0 and spread <= tolerance,
        )

    thetas = (0.25, 0.5, 0.75)
    gaps = [
        interpolation_gap(random_scalar(grid, rng), -0.5, 1.0, thetas[i % len(thetas)])
        for i in range(samples.interpolation)
    ]
    report.record('interpolation', 'max log-convexity gap', max(gaps), 1e-12, max(gaps) <= 1e-12)

    _check_besov_l2(report, grid, rng, samples.besov_l2)

    # products of shell-j factors reach 2^{j+1}·8/3; only shells whose products stay resolved
    product_shells = _middle_shells([j for j in resolved if 2.0 ** (j + 1) * 8 / 3 <= grid.cutoff])
    pairs = samples.per_shell(samples.products, product_shells)
    indices = {'a': (0.5, 0.5), 'b': (0.5, 0.5), 'c': (1.5, 0.5)}
    for law in PRODUCT_LAWS:
        s1, s2 = indices[law.name]
        per_shell = {
            j: max(
                product_ratio(shell_field(grid, j, rng), shell_field(grid, j, rng), law, s1, s2, 2)
                for _ in range(pairs)
            )
            for j in product_shells
        }
        _stability_record(report, 'product-law', f'case {law.name}: s1={s1}, s2={s2}, p=2', per_shell, tolerance)

    pairs = samples.per_shell(samples.paraproducts, product_shells)
    para: Dict[int, float] = {}
    rems: Dict[int, float] = {}
    for j in product_shells:
        # f below shell j, g on shell j
        low = dyadic.ball_multiplier(j - 1)
        para[j] = max(
            paraproduct_ratio(random_scalar(grid, rng, band=low), shell_field(grid, j, rng), 0.5, 2, INF)
            for _ in range(pairs)
        )
        rems[j] = max(
            remainder_ratio(shell_field(grid, j, rng), shell_field(grid, j, rng), 0.5, 0.5, 2, 2, 2)
            for _ in range(pairs)
        )
    _stability_record(report, 'paraproduct', '||T_f g|| / (||f||_inf ||g||), s=1/2, p=2, q=inf', para, tolerance)
    _stability_record(report, 'remainder', '||R(f, g)|| ratio, s1=s2=1/2, p1=p2=p=2', rems, tolerance)

    _check_heat_regularity(report, rng, tolerance)


    log.info(f'analysis suite finished in {time.perf_counter() - started:.1f}s, passed={report.passed}')
    return report


def _mean_modes(grid: GridSpec, mean: float) -> np.ndarray:
    out = np.zeros(grid.shape, dtype=complex)
    out[0, 0, 0] = mean
    return out


# green


def _relative(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    scale = np.linalg.norm(b, axis=(-2, -1))
    return np.linalg.norm(a - b, axis=(-2, -1)) / np.where(scale > 0, scale, 1.0)


def _ode_oracle_error(rng: np.random.Generator, count: int) -> float:
    # e^{ρ²t}Ĝ solves y' = -(Ã - ρ²)y, integrated for every sample at once
    rho = rng.uniform(0.0, 30.0, count)
    t = rng.uniform(0.0, 10.0, count)
    shifted = ReducedGreen.generator(rho) - (rho * rho)[:, None, None] * np.eye(2)

    def rhs(_: float, y: np.ndarray) -> np.ndarray:
        return -(shifted @ y.reshape(count, 2, 2)).reshape(-1)

    y0 = np.broadcast_to(np.eye(2), (count, 2, 2)).reshape(-1)
    sol = solve_ivp(rhs, (0.0, float(t.max())), y0, method='DOP853', rtol=1e-12, atol=1e-14, dense_output=True)
    oracle = np.stack([sol.sol(ti).reshape(count, 2, 2)[i] for i, ti in enumerate(t)])
    closed = reduced_green_eval(rho, t, shift=rho * rho)
    return float(np.max(_relative(closed, oracle)))


def _single_mode_pair(rng: np.random.Generator) -> Tuple[VectorField, VectorField, float]:
    grid = GridSpec(16, 2 * math.pi * rng.uniform(0.5, 4.0))
    kmax = grid.kmax_retained
    while True:
        k = rng.integers(-kmax, kmax + 1, size=3)
        if np.any(k):
            break
    xi = k * grid.unit
    unit = xi / np.linalg.norm(xi)
    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    u_hat = v - unit * (unit @ v)
    w_hat = rng.standard_normal(3) + 1j * rng.standard_normal(3)

    u = np.zeros((3,) + grid.shape, dtype=complex)
    w = np.zeros((3,) + grid.shape, dtype=complex)
    here = (slice(None),) + tuple(int(c) % grid.n for c in k)
    there = (slice(None),) + tuple(int(-c) % grid.n for c in k)
    u[here], u[there] = u_hat, np.conj(u_hat)
    w[here], w[there] = w_hat, np.conj(w_hat)
    return VectorField(grid, u, real=True), VectorField(grid, w, real=True), float(rng.uniform(0.01, 2.0))


def _fit_decay(
    scaled_times: np.ndarray, ratios: Dict[int, np.ndarray]
) -> Tuple[Dict[int, float], Dict[int, float], float]:
    # per shell: c_j from the slope of log ratio against λ²t; C_j with the common c = min c_j
    rates = {j: -fit_line(scaled_times, np.log(r))[0] for j, r in ratios.items()}
    c = min(rates.values())
    prefactors = {j: float(np.max(r * np.exp(c * scaled_times))) for j, r in ratios.items()}
    return rates, prefactors, c


def _pair_lp(a: ScalarField, b: ScalarField, p: float) -> float:
    grid = a.grid
    return float(lebesgue_norm(a.values(), p, grid.cell_volume) + lebesgue_norm(b.values(), p, grid.cell_volume))


def _smoothing_grid(n: int, j: int) -> GridSpec:
    # shell j sits at lattice radii [4, 32/3] on every such grid
    return GridSpec(n, 2 * math.pi * 2.0 ** (2 - j))


def _check_reduced_smoothing(
    report: VerificationReport,
    rng: np.random.Generator,
    *,
    n: int,
    shells: Sequence[int],
    exponents: Sequence[float],
    samples: int,
    tolerance: float,
) -> None:
    scaled_times = np.linspace(0.0, 3.0, 13)
    ratios: Dict[float, Dict[int, np.ndarray]] = {p: {} for p in exponents}
    for j in shells:
        grid = _smoothing_grid(n, j)
        lam2 = 4.0**j
        pairs = [(shell_field(grid, j, rng), shell_field(grid, j, rng)) for _ in range(samples)]
        best = {p: np.zeros(scaled_times.size) for p in exponents}
        for pair in pairs:
            initial = {p: _pair_lp(*pair, p) for p in exponents}
            for i, tau in enumerate(scaled_times):
                a, b = apply_reduced_green(pair, tau / lam2)
                for p in exponents:
                    best[p][i] = max(best[p][i], _pair_lp(a, b, p) / initial[p])
        for p in exponents:
            ratios[p][j] = best[p]

    for p in exponents:
        rates, prefactors, c = _fit_decay(scaled_times, ratios[p])
        spread = _spread(list(prefactors.values()))
        measured = {
            'c': c,
            'C': max(prefactors.values()),
            'spread': spread,
            'c_per_shell': {str(j): v for j, v in rates.items()},
            'C_per_shell': {str(j): v for j, v in prefactors.items()},
        }
        ok = c > 0 and _finite(prefactors.values()) and spread <= tolerance
        report.record('reduced-green-lp-smoothing', f'p={format_exponent(p)}', measured, tolerance, ok)


def _check_full_decay(
    report: VerificationReport,
    rng: np.random.Generator,
    *,
    n: int,
    shells: Sequence[int],
    p: float,
    anchor: str,
    tolerance: Optional[float],
) -> None:
    # the untransformed linear system on annulus data, measured like the reduced one
    scaled_times = np.linspace(0.0, 3.0, 13)
    ratios: Dict[int, np.ndarray] = {}
    for j in shells:
        grid = _smoothing_grid(n, j)
        band = decomposition(grid).shell_multiplier(j)
        u = random_vector(grid, rng, band=band, solenoidal=True)
        w = random_vector(grid, rng, band=band)
        initial = _vector_lp(u, w, p)
        ratios[j] = np.array(
            [_vector_lp(*apply_full_green(u, w, tau / 4.0**j), p) / initial for tau in scaled_times]
        )

    rates, prefactors, c = _fit_decay(scaled_times, ratios)
    spread = _spread(list(prefactors.values()))
    measured = {
        'c': c,
        'C': max(prefactors.values()),
        'spread': spread,
        'c_per_shell': {str(j): v for j, v in rates.items()},
    }
    ok = None if tolerance is None else (c > 0 and spread <= tolerance)
    name = f'untransformed system, p={format_exponent(p)}, shells {list(shells)}'
    report.record(anchor, name, measured, tolerance, ok)


def _vector_lp(u: VectorField, w: VectorField, p: float) -> float:
    if p == 2:
        return math.hypot(u.norm_l2(), w.norm_l2())
    grid = u.grid
    return float(
        np.sum(lebesgue_norm(u.values(), p, grid.cell_volume)) + np.sum(lebesgue_norm(w.values(), p, grid.cell_volume))
    )


def verify_green_suite(
    seed: int = 0,
    /,
    *,
    green_n: int = 64,
    shells: Sequence[int] = (-2, -1, 1, 2, 3),
    exponents: Sequence[Exponent] = (2, 4, 'inf'),
    samples: int = 100,
    smoothing_samples: int = 2,
    scan_points: int = 40,
    tolerance: float = 0.25,
) -> VerificationReport:
    """Runs the Green-matrix identities, oracles, bound scans and smoothing fits.

    Parameters
    ----------
    seed: int
        Seed of every random draw.
    green_n: int
        Grid size of the per-shell smoothing grids.
    shells: Sequence[int]
        Shells of the ``L^p`` smoothing check.
    exponents: Sequence[Union[float, str]]
        Lebesgue exponents of the smoothing check.
    samples: int
        Random ``(ρ, t)`` draws of the ODE oracle and the eigenvalue check.
    smoothing_samples: int
        Random annulus pairs per shell.
    scan_points: int
        Points per axis of the coarse bound-scan grid; the refined grid doubles them.
    tolerance: float
        Largest relative spread of the smoothing prefactors across shells.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    lp = [parse_exponent(p) for p in exponents]
    report = VerificationReport(
        'verify-green',
        env=_env(None, seed, green_n=green_n, shells=list(shells), exponents=[format_exponent(p) for p in lp]),
    )

    times = np.array([0.0, 0.1, 1.0, 10.0])
    at_zero = reduced_green_eval(0.0, times)
    expected = np.zeros_like(at_zero)
    expected[:, 0, 0] = 1.0
    expected[:, 1, 1] = np.exp(-2 * times)
    rho = log_grid(1e-3, 1e3, 50)
    err = max(
        float(np.max(np.abs(at_zero - expected))),
        float(np.max(np.abs(reduced_green_eval(rho, 0.0) - np.eye(2)))),
    )
    report.record('reduced-green-closed-form', 'rho = 0 and t = 0 values', err, 1e-14, err <= 1e-14)

    err = _ode_oracle_error(rng, samples)
    report.record('reduced-green-ode', f'closed form vs DOP853 over {samples} draws', err, 1e-8, err <= 1e-8)

    rho = log_grid(0.1, 30.0, samples)
    lower, upper = ReducedGreen.eigenvalues(rho)
    direct = np.linalg.eigvalsh(ReducedGreen.generator(rho))
    err = float(np.max(np.abs(np.stack([lower, upper], axis=-1) - direct) / direct))
    report.record('reduced-green-eigenvalues', 'closed-form eigenvalues vs eigvalsh', err, 1e-12, err <= 1e-12)

    rho = rng.uniform(0.0, 5.0, samples)
    t, s = rng.uniform(0.0, 2.0, samples), rng.uniform(0.0, 2.0, samples)
    composed = reduced_green_eval(rho, t) @ reduced_green_eval(rho, s)
    err = float(np.max(_relative(composed, reduced_green_eval(rho, t + s))))
    report.record('reduced-green-semigroup', 'G(t) G(s) = G(t + s)', err, 1e-11, err <= 1e-11)

    rr, tt = np.meshgrid(log_grid(0.1, 30.0, scan_points), log_grid(0.01, 10.0, scan_points), indexing='ij')
    values = reduced_green_eval(rr, tt)
    asym = float(np.max(np.abs(values - np.swapaxes(values, -1, -2))))
    report.record('reduced-green-closed-form', 'symmetry of G', asym, 0.0, asym == 0.0)
    op = float(np.max(np.linalg.norm(values, ord=2, axis=(-2, -1))))
    report.record('reduced-green-bounded', 'sup ||G||_op over the scan grid', op, 1.05, op <= 1.05)

    for order in (0, 1, 2):
        alpha = (order, 0, 0)
        coarse = scan_derivative_bounds(alpha, log_grid(0.1, 30.0, scan_points), log_grid(0.01, 10.0, scan_points))
        fine = scan_derivative_bounds(
            alpha, log_grid(0.1, 30.0, 2 * scan_points - 1), log_grid(0.01, 10.0, 2 * scan_points - 1)
        )
        drift = abs(fine.measured_sup - coarse.measured_sup) / coarse.measured_sup
        measured = {
            'sup': fine.measured_sup,
            'coarse_sup': coarse.measured_sup,
            'drift': drift,
            'argmax': list(fine.argmax),
            'diagnostics': coarse.diagnostics + fine.diagnostics,
        }
        ok = coarse.verdict is Verdict.PASS and fine.verdict is Verdict.PASS and drift <= 0.05
        report.record('derivative-bounds', f'|alpha|={order}, refinement drift', measured, 0.05, ok)

    green = FullGreen()
    xi = rng.standard_normal((samples, 3)) * rng.uniform(0.1, 30.0, (samples, 1)) / math.sqrt(3)
    t_full = float(rng.uniform(0.01, 1.0))
    identity = float(np.max(np.abs(green.evaluate(xi, 0.0) - np.eye(6))))
    report.record('full-green-identity', 'e^{-A 0} = I', identity, 1e-14, identity <= 1e-14)

    pade = green.evaluate(xi, t_full)
    eig = green.evaluate(xi, t_full, method='eigh')
    reference = np.stack([scipy_expm(-t_full * a) for a in FullGreen.symbol(xi)])
    err = float(max(np.max(_relative(pade, reference)), np.max(_relative(eig, reference))))
    report.record('full-green-expm', 'Pade and eigh vs scipy.linalg.expm', err, 1e-10, err <= 1e-10)

    rho = np.linalg.norm(xi, axis=-1)
    direction = np.concatenate([np.zeros_like(xi), xi / rho[:, None]], axis=-1)
    along = np.einsum('mij,mj->mi', pade, direction)
    err = float(np.max(np.abs(along - np.exp(-(2 * rho**2 + 2) * t_full)[:, None] * direction)))
    report.record('full-green-gradient-mode', 'omega parallel to xi decays at 2|xi|^2 + 2', err, 1e-12, err <= 1e-12)

    worst = 0.0
    for _ in range(20):
        u, w, t_mode = _single_mode_pair(rng)
        reduced = apply_semigroups(transform(State(u, w)), t_mode)
        u_t, w_t = apply_full_green(u, w, t_mode)
        worst = max(worst, transform(State(u_t, w_t, t_mode)).distance(reduced))
    name = 'transformed full evolution vs reduced evolution, 20 modes'
    report.record('full-vs-reduced', name, worst, 1e-8, worst <= 1e-8)

    _check_reduced_smoothing(
        report, rng, n=green_n, shells=shells, exponents=lp, samples=smoothing_samples, tolerance=tolerance
    )
    _check_full_decay(
        report, rng, n=green_n, shells=[1, 2, 3], p=2.0, anchor='full-green-l2-contraction', tolerance=tolerance
    )
    low = [j for j in shells if j < 0][:1] or [-2]
    _check_full_decay(report, rng, n=green_n, shells=low, p=INF, anchor='full-green-lp-contrast', tolerance=None)

    log.info(f'green suite finished in {time.perf_counter() - started:.1f}s, passed={report.passed}')
    return report


# dynamics


@dataclass(frozen=True)
class DynamicsPreset:
    """A small-data run and the windows its diagnostics are judged on.

    Attributes
    ----------
    grid: :class:`GridSpec`
    integrator: :class:`IntegratorConfig`
    data: :class:`DataFamily`
    exponents: Tuple[float, ...]
        Lebesgue exponents of the boundedness and decay probes.
    decay_alphas: Tuple[Tuple[int, int, int], ...]
        Derivatives whose decay slopes are fitted.
    decay_window: Tuple[float, float]
    boundedness_window: Tuple[float, float]
        Window of the no-growth slope.
    oscillation_exponents: Tuple[float, ...]
    oscillation_grid: Optional[:class:`GridSpec`]
        Grid of the oscillation ladder; ``grid`` when omitted.
    oscillation_margin: float
        Gaussian spectral widths kept between the oscillation frequency and both
        ends of the resolved band.
    ledger_exponents: Tuple[float, ...]
    amplification_ceiling: float
    """

    grid: GridSpec = GridSpec()
    integrator: IntegratorConfig = IntegratorConfig(dt=0.1, t_end=50.0, sample_stride=10)
    data: DataFamily = DataFamily(DataKind.GAUSSIAN, normalize_to=0.01)
    exponents: Tuple[float, ...] = (2.0, 4.0)
    decay_alphas: Tuple[Tuple[int, int, int], ...] = ((1, 0, 0), (1, 1, 0))
    decay_window: Tuple[float, float] = (1.0, 50.0)
    boundedness_window: Tuple[float, float] = (10.0, 50.0)
    oscillation_exponents: Tuple[float, ...] = (4.0, 6.0)
    oscillation_grid: Optional[GridSpec] = None
    oscillation_margin: float = 4.0
    ledger_exponents: Tuple[float, ...] = (2.0, 4.0)
    amplification_ceiling: float = 10.0
    decay_tolerance: float = 0.15
    oscillation_tolerance: float = 0.1
    growth_tolerance: float = 0.05

    @classmethod
    def default(cls) -> DynamicsPreset:
        """128³ on ``L = 32π`` up to ``t = 50``."""
        return cls()

    @classmethod
    def quick(cls) -> DynamicsPreset:
        """A 32³ run to ``t = 4``, for smoke tests."""
        return cls(
            grid=GridSpec(32, 8 * math.pi),
            integrator=IntegratorConfig(dt=0.1, t_end=4.0, sample_stride=5),
            decay_window=(1.0, 4.0),
            boundedness_window=(2.0, 4.0),
            oscillation_grid=GridSpec(64, 16 * math.pi),
            oscillation_margin=2.0,
        )

    def probes(self) -> List[Probe]:
        out = []
        for p in self.exponents:
            params = BesovParams(3 / p - 1, p, INF)
            out.append(Probe(params))
            out.extend(Probe(params, alpha=alpha) for alpha in self.decay_alphas)
        return out


def oscillation_ladder(grid: GridSpec, /, *, count: int = 5, margin: float = 4.0) -> List[float]:
    """Oscillation scales ``ε`` for the ``CANNONE_OSC`` family on ``grid``.

    ``1/ε`` runs geometrically between ``margin`` spectral widths of the Gaussian
    profile and the cutoff less the same margin, snapped to lattice multiples.

    Raises
    ------
    InsufficientSamples
        Fewer than two distinct scales fit.
    """
    width = 16 / grid.box_length  # spectral width of the profile of width L/16
    lo = math.ceil(margin * width / grid.unit)
    hi = math.floor((grid.cutoff - margin * width) / grid.unit)
    if hi - lo + 1 < 2:
        raise InsufficientSamples(f'no oscillation ladder fits on {grid!r} with margin {margin:g}')
    multiples = sorted({int(round(m)) for m in np.geomspace(lo, hi, count)})
    if len(multiples) < min(count, hi - lo + 1):
        multiples = sorted({int(round(m)) for m in np.linspace(lo, hi, min(count, hi - lo + 1))})
    return [1 / (m * grid.unit) for m in multiples]


def continuation_monitor(series: TimeSeries[VectorField], window: float, /) -> float:
    """``sup_j ∫ ‖Δ_j(∇×u)‖_∞ dt`` over the trailing ``window`` of a velocity series.

    Raises
    ------
    InsufficientSamples
        Fewer than two snapshots fall inside the window.
    """
    times = np.asarray(series.times, dtype=float)
    if times.size < 2 or int(np.sum(times >= times[-1] - window - 1e-12)) < 2:
        raise InsufficientSamples('the continuation monitor needs two snapshots in the window')
    grid = series.samples[0].grid
    shells = list(decomposition(grid).resolved_shells())
    norms = [shell_norms(curl(u), INF, shells=shells).sum(axis=0) for u in series.samples]
    return continuation_from_shells(times, norms, window)


def _window(times: np.ndarray, bounds: Tuple[float, float]) -> np.ndarray:
    return (times >= bounds[0] - 1e-12) & (times <= bounds[1] + 1e-12) & (times > 0)


def _check_boundedness(report: VerificationReport, preset: DynamicsPreset, result: RunResult) -> None:
    times = np.asarray(result.times)
    for p in preset.exponents:
        series = np.asarray(result.probes[Probe(BesovParams(3 / p - 1, p, INF)).name])
        amplification = float(series.max() / series[0]) if series[0] > 0 else 0.0
        report.record(
            'boundedness',
            f'sup_t ||(u, omega)||_B^(3/p-1)_(p,inf) / initial, p={format_exponent(p)}',
            amplification,
            preset.amplification_ceiling,
            math.isfinite(amplification) and amplification <= preset.amplification_ceiling,
        )
        inside = _window(times, preset.boundedness_window)
        if inside.sum() >= 2 and np.all(series[inside] > 0):
            slope = loglog_slope(times[inside], series[inside])
            report.record(
                'boundedness',
                f'no-growth slope over {list(preset.boundedness_window)}, p={format_exponent(p)}',
                slope,
                preset.growth_tolerance,
                slope <= preset.growth_tolerance,
            )
        else:
            name = f'no-growth slope, p={format_exponent(p)}'
            report.record('boundedness', name, None, 'two positive samples', False)

    residual = max(result.div_residual)
    report.record('plumbing', 'max divergence residual', residual, 1e-10, residual <= 1e-10)
    e = np.asarray(result.energy)
    rise = float(np.max(np.diff(e), initial=0.0))
    allowed = 1e-12 * float(e[0])
    report.record('energy-inequality', 'largest energy increase between samples', rise, allowed, rise <= allowed)


def _check_decay(report: VerificationReport, preset: DynamicsPreset, result: RunResult) -> None:
    times = np.asarray(result.times)
    inside = _window(times, preset.decay_window)
    tol = preset.decay_tolerance
    for p in preset.exponents:
        params = BesovParams(3 / p - 1, p, INF)
        base = np.asarray(result.probes[Probe(params).name])
        for alpha in preset.decay_alphas:
            order = sum(alpha)
            series = np.asarray(result.probes[Probe(params, alpha=alpha).name])
            name = f'alpha={list(alpha)}, p={format_exponent(p)}'
            usable = inside & (series > 0) & (base > 0)
            if usable.sum() < 2:
                report.record('decay', name, None, tol, False)
                continue
            raw = loglog_slope(times[usable], series[usable])
            ratio = loglog_slope(times[usable], series[usable] / base[usable])
            c0 = float(np.max(series[usable] * times[usable] ** (order / 2)))
            measured = {'raw_slope': raw, 'ratio_slope': ratio, 'target': -order / 2, 'C0': c0}
            ok = raw <= -order / 2 + tol and abs(ratio + order / 2) <= tol
            report.record('decay', name, measured, tol, ok)


def _check_oscillation(report: VerificationReport, preset: DynamicsPreset) -> None:
    grid = preset.oscillation_grid or preset.grid
    try:
        ladder = oscillation_ladder(grid, margin=preset.oscillation_margin)
    except InsufficientSamples as exc:
        report.record('oscillation-scaling', 'epsilon ladder', str(exc), None, False)
        return

    for p in preset.oscillation_exponents:
        probe = Probe(BesovParams(3 / p - 1, p, INF), FieldSelector.OMEGA)
        norms = [
            probe.evaluate(make_initial_data(DataFamily(DataKind.CANNONE_OSC, epsilon=eps), grid)) for eps in ladder
        ]
        slope = loglog_slope(ladder, norms)
        target = 1 - 3 / p
        measured = {'slope': slope, 'target': target, 'epsilon': ladder, 'norms': norms}
        report.record(
            'oscillation-scaling',
            f'log-norm vs log-epsilon, p={format_exponent(p)}',
            measured,
            preset.oscillation_tolerance,
            abs(slope - target) <= preset.oscillation_tolerance,
        )


def _check_ledger(report: VerificationReport, result: RunResult) -> None:
    times = result.times
    shells = result.shells
    for p, history in result.ledger.items():
        if len(times) < 2:
            report.record('a-priori-ledger', f'p={format_exponent(p)}', None, None, False)
            continue
        norms = np.asarray(history)
        top = chemin_lerner_from_shells(times, norms, shells, INF, 3 / p - 1, INF)
        bottom = chemin_lerner_from_shells(times, norms, shells, 1, 3 / p + 1, INF)
        total = top + bottom
        initial = besov_from_shells(norms[0], shells, 3 / p - 1, INF)
        implied = total / (initial + total * total) if initial + total > 0 else 0.0
        measured = {'E': total, 'sup_part': top, 'integral_part': bottom, 'initial': initial, 'C': implied}
        report.record('a-priori-ledger', f'p={format_exponent(p)}', measured, None, None)

    if 2.0 in result.ledger and len(times) >= 1:
        hilbert = chemin_lerner_from_shells(times, np.asarray(result.ledger[2.0]), shells, INF, 0.5, 2)
        report.record('critical-hilbert', 'L~^inf B^(1/2)_(2,2) of (u, omega)', hilbert, None, None)


def _check_continuation(report: VerificationReport, result: RunResult, window: float) -> None:
    times = np.asarray(result.times)
    monitor = np.asarray(result.continuation)
    later = np.flatnonzero(times >= times[0] + window - 1e-12)
    if later.size < 2:
        report.record('continuation', 'monitor at the end of the run', float(monitor[-1]), None, None)
        return
    first, last = float(monitor[later[0]]), float(monitor[-1])
    measured = {'first_full_window': first, 'final': last}
    ok = last <= first * (1 + 1e-9)
    report.record('continuation', 'monitor does not grow after the first full window', measured, None, ok)


def verify_dynamics_suite(preset: Optional[DynamicsPreset] = None, seed: int = 0, /) -> VerificationReport:
    """Runs a small-data simulation and judges boundedness, decay, oscillation and the ledger.

    A blow-up during the run fails the suite; the checks that need the full run are
    then skipped.
    """
    started = time.perf_counter()
    preset = preset or DynamicsPreset.default()
    data = replace(preset.data, seed=seed) if preset.data.kind is DataKind.SHELL_RANDOM else preset.data
    report = VerificationReport(
        'verify-dynamics',
        env=_env(preset.grid, seed, t_end=preset.integrator.t_end, dt=preset.integrator.dt, data=data.kind.value),
    )

    s0 = make_initial_data(data, preset.grid)
    ledger = tuple(dict.fromkeys((*preset.ledger_exponents, 2.0)))
    try:
        result = run(s0, preset.integrator, preset.probes(), ledger_exponents=ledger)
    except BlowUp as exc:
        report.record('boundedness', 'small-data run completes', {'t': exc.t, 'shell': exc.shell}, None, False)
        return report

    log.info(f'dynamics run: {len(result)} samples, final energy {energy(result.final):.6g}')  # type: ignore
    _check_boundedness(report, preset, result)
    _check_decay(report, preset, result)
    _check_oscillation(report, preset)
    _check_ledger(report, result)
    _check_continuation(report, result, preset.integrator.continuation_window)

    log.info(f'dynamics suite finished in {time.perf_counter() - started:.1f}s, passed={report.passed}')
    return report
