"""Time stepping of the transformed system and the initial-data families.

Production runs use exponential integrators built on the exact linear semigroups
(the Duhamel formula with the nonlinearity interpolated in time). ``REF_RK4``
integrates the Leray-projected primitive system with classical Runge-Kutta and is
only meant as an oracle.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .core import (
    PhysicalParams,
    State,
    TransformedState,
    divergence_residual,
    energy,
    nonlinear_terms,
    rhs_projected,
    to_state,
    transform,
    transform_tendency,
)
from .enums import DataKind, FieldSelector, Scheme
from .errors import BlowUp, ConfigurationError, InconsistentState, InvalidParameters
from .grid import (
    GridSpec,
    VectorField,
    curl,
    derivative,
    forward,
    leray_project,
    random_vector,
)
from .green import propagator
from .littlewood_paley import BesovParams, besov_norm, decomposition, shell_norms
from .utils import parse_exponent

if TYPE_CHECKING:
    from .types import Exponent

__all__ = (
    'RK4_STABILITY_LIMIT',
    'IntegratorConfig',
    'DataFamily',
    'gaussian_profile',
    'make_initial_data',
    'Probe',
    'RunResult',
    'step',
    'run',
    'continuation_from_shells',
)

log = logging.getLogger(__name__)

#: Extent of the classical RK4 stability region along the negative real axis.
RK4_STABILITY_LIMIT: float = 2.78


@dataclass(frozen=True)
class IntegratorConfig:
    """Time-stepping settings.

    Parameters
    ----------
    dt: float
        Largest step size; runs take :attr:`steps` equal steps of :attr:`step_size`.
    t_end: float
        Final time.
    scheme: :class:`Scheme`
        Integration scheme.
    sample_stride: int
        Diagnostics are recorded every ``sample_stride`` steps and at the end.
    dealias: bool
        Whether convection products are dealiased.
    nonlinear: bool
        Whether the nonlinear terms are included.
    continuation_window: float
        Length of the trailing window of the continuation monitor.
    """

    dt: float = 0.1
    t_end: float = 1.0
    scheme: Scheme = Scheme.ETDRK2
    sample_stride: int = 1
    dealias: bool = True
    nonlinear: bool = True
    continuation_window: float = 5.0

    def violations(self, grid: Optional[GridSpec] = None, /) -> List[str]:
        """Every violated invariant; the stability guard needs ``grid``."""
        out = []
        if not self.dt > 0:
            out.append(f'integrator.dt must be positive, got {self.dt}')
        if not self.t_end > 0:
            out.append(f'integrator.t_end must be positive, got {self.t_end}')
        if self.sample_stride < 1:
            out.append(f'integrator.sample_stride must be at least 1, got {self.sample_stride}')
        if not self.continuation_window > 0:
            out.append('integrator.continuation_window must be positive')
        if grid is not None and self.scheme is Scheme.REF_RK4 and self.dt > 0:
            bound = self.rk4_stability_bound(grid)
            if self.dt > bound:
                out.append(
                    f'integrator.dt={self.dt:g} exceeds the REF_RK4 stability bound {bound:.6g} '
                    f'(2.78 / (2 max|xi|^2 + 2) on n={grid.n}, L={grid.box_length:g})'
                )
        return out

    def validate(self, grid: Optional[GridSpec] = None, /) -> None:
        violations = self.violations(grid)
        if violations:
            raise ConfigurationError(violations)

    @staticmethod
    def rk4_stability_bound(grid: GridSpec, /) -> float:
        """Largest stable RK4 step for the stiffest resolved linear rate ``2 max|ξ|² + 2``."""
        return RK4_STABILITY_LIMIT / (2 * grid.max_resolved_k2 + 2)

    def stiffness(self, grid: GridSpec, /) -> float:
        """float: ``dt · max|ξ|²`` over the dealiased lattice."""
        return self.dt * grid.max_resolved_k2

    @property
    def steps(self) -> int:
        """int: The fewest equal steps no longer than ``dt`` that end exactly at ``t_end``."""
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))

    @property
    def step_size(self) -> float:
        """float: ``t_end / steps``, at most ``dt``."""
        return self.t_end / self.steps


def gaussian_profile(grid: GridSpec, /) -> np.ndarray:
    """The centred Gaussian of width ``L/16`` sampled on the grid."""
    width = grid.box_length / 16
    centre = grid.box_length / 2
    x1, x2, x3 = grid.coordinates()
    r2 = (x1 - centre) ** 2 + (x2 - centre) ** 2 + (x3 - centre) ** 2
    return np.exp(-r2 / (2 * width * width))


@dataclass(frozen=True)
class DataFamily:
    """An initial-data family.

    Parameters
    ----------
    kind: :class:`DataKind`
        The family.
    amplitude: float
        Multiplies the data; ignored when ``normalize_to`` is set, unless zero.
    normalize_to: Optional[float]
        Rescales the data so that ``‖(u₀, ω₀)‖_{Ḃ^{1/2}_{2,∞}}`` equals this value.
    epsilon: Optional[float]
        Oscillation scale of ``CANNONE_OSC``; ``1/ε`` must be a lattice multiple of ``2π/L``.
    shell: Optional[int]
        Dyadic shell of ``SHELL_RANDOM``.
    seed: int
        Seed of ``SHELL_RANDOM``.
    """

    kind: DataKind = DataKind.GAUSSIAN
    amplitude: float = 1.0
    normalize_to: Optional[float] = None
    epsilon: Optional[float] = None
    shell: Optional[int] = None
    seed: int = 0

    def violations(self, grid: GridSpec, /) -> List[str]:
        out = []
        if self.normalize_to is not None and not self.normalize_to >= 0:
            out.append('data.normalize_to must be nonnegative')
        if self.kind is DataKind.CANNONE_OSC:
            if self.epsilon is None or not self.epsilon > 0:
                out.append('data.epsilon must be positive for CANNONE_OSC')
            else:
                multiple = (1 / self.epsilon) / grid.unit
                if abs(multiple - round(multiple)) > 1e-9 * max(1.0, multiple):
                    out.append(
                        f'data.epsilon={self.epsilon:g}: 1/epsilon must be an integer multiple of '
                        f'2*pi/L = {grid.unit:g} (got {multiple:.6g} multiples)'
                    )
        if self.kind is DataKind.SHELL_RANDOM:
            resolved = decomposition(grid).resolved
            if self.shell is None or self.shell not in resolved:
                out.append(
                    f'data.shell={self.shell} must lie in the resolved range '
                    f'[{resolved.start}, {resolved.stop - 1}]'
                )
        return out


def _scaled(s: State, factor: float) -> State:
    return State(s.u * factor, s.omega * factor, s.t)


def make_initial_data(family: DataFamily, grid: GridSpec, /) -> State:
    """Builds ``(u₀, ω₀)``; every field is dealiased and ``u₀`` is Leray-projected.

    * ``GAUSSIAN``: ``u₀ = A∇×(φ, φ, φ)``, ``ω₀ = A(∂₂φ, ∂₃φ, ∂₁φ)``.
    * ``CANNONE_OSC``: ``u₀ = A sin(x₃/ε)(−∂₂φ, ∂₁φ, 0)``, ``ω₀ = A e^{ix₁/ε}φ(1, 1, 1)``.
    * ``SHELL_RANDOM``: random fields localised in shell ``j``.

    ``φ`` is the Gaussian of :func:`gaussian_profile`.

    Raises
    ------
    ConfigurationError
        The family is inconsistent with the grid.
    """
    violations = family.violations(grid)
    if violations:
        raise ConfigurationError(violations)

    if family.amplitude == 0:
        return State.zero(grid)

    if family.kind is DataKind.SHELL_RANDOM:
        rng = np.random.default_rng(family.seed)
        band = decomposition(grid).shell_multiplier(family.shell)  # type: ignore
        u = random_vector(grid, rng, band=band, solenoidal=True)
        omega = random_vector(grid, rng, band=band)
    else:
        phi_hat = forward(gaussian_profile(grid)) * grid.dealias_mask
        d1, d2, d3 = grid.first_derivatives
        if family.kind is DataKind.GAUSSIAN:
            potential = VectorField._wrap(grid, np.stack([phi_hat] * 3), True)
            u = curl(potential)
            omega = VectorField._wrap(grid, np.stack([d2 * phi_hat, d3 * phi_hat, d1 * phi_hat]), True)
        else:
            k = 1 / family.epsilon  # type: ignore
            x1, _, x3 = grid.coordinates()
            planar = VectorField._wrap(grid, np.stack([-d2 * phi_hat, d1 * phi_hat, np.zeros(grid.shape)]), True)
            u = VectorField.from_values(grid, np.sin(k * x3) * planar.values())
            phi = gaussian_profile(grid)
            osc = np.exp(1j * k * x1) * phi
            omega = VectorField.from_values(grid, np.stack([osc, osc, osc]))

    u = leray_project(u.masked())
    omega = omega.masked()
    state = State(u * family.amplitude, omega * family.amplitude)

    if family.normalize_to is not None:
        current = besov_norm((state.u, state.omega), BesovParams(0.5, 2, math.inf))
        if current > 0:
            state = _scaled(state, family.normalize_to / current)
    log.debug(f'initial data {family.kind.value} on {grid!r}, energy={energy(state):.6g}')
    return state


@dataclass(frozen=True)
class Probe:
    """A Besov norm request ``‖D^α f‖_{Ḃ^s_{p,q}}`` recorded along a run.

    ``f`` is ``u``, ``ω`` or the pair, whose norm is the sum of both.
    """

    params: BesovParams
    field: FieldSelector = FieldSelector.BOTH
    alpha: Tuple[int, int, int] = (0, 0, 0)

    @property
    def name(self) -> str:
        p = self.params
        text = f'{self.field.value}_s{p.s:g}_p{_short(p.p)}_q{_short(p.q)}'
        if any(self.alpha):
            text += '_d' + ''.join(str(a) for a in self.alpha)
        return text

    def fields(self, s: State, /) -> Tuple[VectorField, ...]:
        if self.field is FieldSelector.U:
            chosen: Tuple[VectorField, ...] = (s.u,)
        elif self.field is FieldSelector.OMEGA:
            chosen = (s.omega,)
        else:
            chosen = (s.u, s.omega)
        if any(self.alpha):
            chosen = tuple(derivative(f, self.alpha) for f in chosen)
        return chosen

    def evaluate(self, s: State, /) -> float:
        return besov_norm(self.fields(s), self.params)


def _short(value: float) -> str:
    return 'inf' if math.isinf(value) else f'{value:g}'


@dataclass
class RunResult:
    """Diagnostics gathered along a run.

    Attributes
    ----------
    times: List[float]
        Sample times.
    probes: Dict[str, List[float]]
        One series per probe name.
    energy: List[float]
    div_residual: List[float]
    continuation: List[float]
        The continuation monitor at each sample.
    shells: List[int]
        Resolved shells of the ledger histories.
    ledger: Dict[float, List[numpy.ndarray]]
        Per ledger exponent ``p``, per sample, the shell norms of ``(u, ω)`` with shape
        ``(6, shells)``.
    curl_shells: List[numpy.ndarray]
        Per sample, ``‖Δ_j ∇×u‖_∞`` summed over components.
    final: Optional[State]
    """

    times: List[float] = field(default_factory=list)
    probes: Dict[str, List[float]] = field(default_factory=dict)
    energy: List[float] = field(default_factory=list)
    div_residual: List[float] = field(default_factory=list)
    continuation: List[float] = field(default_factory=list)
    shells: List[int] = field(default_factory=list)
    ledger: Dict[float, List[np.ndarray]] = field(default_factory=dict)
    curl_shells: List[np.ndarray] = field(default_factory=list)
    final: Optional[State] = None

    @property
    def columns(self) -> List[str]:
        return ['t', *self.probes, 'energy', 'div_residual', 'continuation']

    def rows(self) -> List[List[float]]:
        names = list(self.probes)
        return [
            [t, *(self.probes[name][i] for name in names), self.energy[i], self.div_residual[i], self.continuation[i]]
            for i, t in enumerate(self.times)
        ]

    def __len__(self) -> int:
        return len(self.times)


def continuation_from_shells(times: Sequence[float], norms: Sequence[np.ndarray], window: float, /) -> float:
    """``sup_j ∫ ‖Δ_j ∇×u‖_∞ dt`` over the trailing window, from recorded shell norms.

    Returns zero with fewer than two samples in the window.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return 0.0
    inside = times >= times[-1] - window - 1e-12
    if inside.sum() < 2:
        return 0.0
    history = np.asarray(norms, dtype=float)[inside]
    return float(np.max(trapezoid(history, times[inside], axis=0), initial=0.0))


Arrays = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


def _nonlinear(
    ts_arrays: Arrays, grid: GridSpec, real: Tuple[bool, bool], t: float, dealias: bool
) -> Tuple[Arrays, State]:
    ts = TransformedState.from_arrays(grid, *ts_arrays, t, real=real[0], real_omega=real[1])
    s = to_state(ts, tolerance=np.inf)
    nu, nw = nonlinear_terms(s, dealias=dealias)
    n = transform_tendency(nu, nw)
    return (-n.u_A.modes, -n.omega_Omega.modes, -n.omega_d.modes, -np.asarray(n.omega_mean)), s


def _check_finite(arrays: Arrays, grid: GridSpec, t: float) -> None:
    for a in arrays[:3]:
        bad = ~np.isfinite(a)
        if bad.any():
            shell = decomposition(grid).shell_of(bad.reshape((-1,) + grid.shape).any(axis=0))
            raise BlowUp(t, shell)
    if not np.all(np.isfinite(arrays[3])):
        raise BlowUp(t, None)


def _etd(ts: TransformedState, s: State, cfg: IntegratorConfig) -> TransformedState:
    grid = ts.grid
    real = (ts.u_A.is_real, ts.omega_d.is_real)
    prop = propagator(grid, cfg.dt)
    y = ts.arrays()
    t_next = ts.t + cfg.dt

    linear = prop.apply(0, y)
    if not cfg.nonlinear:
        out = linear
    else:
        nu, nw = nonlinear_terms(s, dealias=cfg.dealias)
        n = transform_tendency(nu, nw)
        n0 = (-n.u_A.modes, -n.omega_Omega.modes, -n.omega_d.modes, -np.asarray(n.omega_mean))
        forced = prop.apply(1, n0)
        predictor = tuple(a + b for a, b in zip(linear, forced))
        if cfg.scheme is Scheme.ETD1:
            out = predictor
        else:
            n1, _ = _nonlinear(predictor, grid, real, t_next, cfg.dealias)  # type: ignore
            correction = prop.apply(2, tuple(b - a for a, b in zip(n0, n1)))  # type: ignore
            out = tuple(a + b for a, b in zip(predictor, correction))

    _check_finite(out, grid, t_next)  # type: ignore
    return TransformedState.from_arrays(grid, *out, t_next, real=real[0], real_omega=real[1])


def _rk4(s: State, cfg: IntegratorConfig, params: PhysicalParams) -> State:
    h = cfg.dt

    def f(state: State) -> Tuple[VectorField, VectorField]:
        return rhs_projected(state, params, nonlinear=cfg.nonlinear, dealias=cfg.dealias)

    def shifted(k: Tuple[VectorField, VectorField], factor: float) -> State:
        return State(s.u + k[0] * factor, s.omega + k[1] * factor, s.t, tolerance=np.inf)

    k1 = f(s)
    k2 = f(shifted(k1, h / 2))
    k3 = f(shifted(k2, h / 2))
    k4 = f(shifted(k3, h))
    du = (k1[0] + k2[0] * 2 + k3[0] * 2 + k4[0]) * (h / 6)
    dw = (k1[1] + k2[1] * 2 + k3[1] * 2 + k4[1]) * (h / 6)
    u = s.u + du
    omega = s.omega + dw
    _check_finite((u.modes, omega.modes, np.zeros(1), np.zeros(1)), s.grid, s.t + h)
    return State(u, omega, s.t + h)


def step(
    ts: TransformedState,
    s: State,
    cfg: IntegratorConfig,
    /,
    *,
    params: PhysicalParams = PhysicalParams(),
    check: bool = True,
) -> Tuple[TransformedState, State]:
    """Advances the pair ``(ts, s)`` by one step of ``cfg.dt``.

    ``ETD1`` freezes the nonlinearity at the left endpoint of the Duhamel integral;
    ``ETDRK2`` corrects it with the predicted right endpoint, which amounts to the
    trapezoidal rule on the nonlinear term. ``REF_RK4`` advances ``s`` directly.
    The primitive state returned by the exponential schemes is reconstructed from
    the transformed variables.

    Raises
    ------
    InconsistentState
        ``ts`` is not the transform of ``s``.
    InvalidParameters
        An exponential scheme was asked to use non-default coefficients.
    BlowUp
        A coefficient became non-finite.
    """
    if check:
        defect = transform(s).distance(ts)
        if defect > 1e-8:
            raise InconsistentState(f'transformed state differs from transform(state) by {defect:.3e}')

    if cfg.scheme is Scheme.REF_RK4:
        s_next = _rk4(s, cfg, params)
        return transform(s_next), s_next

    if not params.is_default:
        raise InvalidParameters('the transformed system is only available at the default coefficients')
    ts_next = _etd(ts, s, cfg)
    return ts_next, to_state(ts_next)


def run(
    s0: State,
    cfg: IntegratorConfig,
    probes: Sequence[Probe] = (),
    /,
    *,
    params: PhysicalParams = PhysicalParams(),
    ledger_exponents: Sequence[Exponent] = (),
    snapshot_sink: Optional[Callable[[State], None]] = None,
    snapshot_stride: int = 0,
) -> RunResult:
    """Integrates from ``s0`` to ``cfg.t_end`` and records diagnostics.

    Parameters
    ----------
    s0: :class:`State`
        Initial state.
    cfg: :class:`IntegratorConfig`
        Time stepping.
    probes: Sequence[:class:`Probe`]
        Norms recorded at every sample.
    params: :class:`PhysicalParams`
        Coefficients; exponential schemes need the defaults.
    ledger_exponents: Sequence[Union[float, str]]
        Lebesgue exponents whose per-shell norms of ``(u, ω)`` are recorded.
    snapshot_sink: Optional[Callable[[:class:`State`], None]]
        Receives every ``snapshot_stride``-th sampled state.
    snapshot_stride: int
        Zero disables snapshots.

    Raises
    ------
    BlowUp
        A coefficient became non-finite; ``partial`` holds the :class:`RunResult`
        gathered so far.
    """
    cfg.validate(s0.grid)
    grid = s0.grid
    dyadic = decomposition(grid)
    shells = list(dyadic.resolved_shells())
    exponents = [parse_exponent(p) for p in ledger_exponents]

    result = RunResult(shells=shells)
    result.probes = {probe.name: [] for probe in probes}
    result.ledger = {p: [] for p in exponents}

    def sample(state: State) -> None:
        result.times.append(state.t)
        for probe in probes:
            result.probes[probe.name].append(probe.evaluate(state))
        result.energy.append(energy(state))
        result.div_residual.append(divergence_residual(state.u))
        for p in exponents:
            result.ledger[p].append(shell_norms((state.u, state.omega), p, shells=shells))
        result.curl_shells.append(shell_norms(curl(state.u), math.inf, shells=shells).sum(axis=0))
        result.continuation.append(
            continuation_from_shells(result.times, result.curl_shells, cfg.continuation_window)
        )
        log.info(
            f't={state.t:.6g} energy={result.energy[-1]:.6g} '
            f'continuation={result.continuation[-1]:.6g}'
        )
        index = len(result.times) - 1
        if snapshot_sink is not None and snapshot_stride > 0 and index % snapshot_stride == 0:
            snapshot_sink(state)

    stepping = replace(cfg, dt=cfg.step_size)
    log.info(
        f'run start: {cfg.scheme.value}, {cfg.steps} steps of {stepping.dt:g}, t_end={cfg.t_end:g}, {grid!r}'
    )
    started = time.perf_counter()

    s = s0
    ts = transform(s0)
    sample(s)
    for n in range(1, cfg.steps + 1):
        tick = time.perf_counter()
        try:
            ts, s = step(ts, s, stepping, params=params, check=False)
        except BlowUp as exc:
            exc.partial = result
            log.error(f'blow-up at t={exc.t:.6g} in shell {exc.shell}')
            raise
        if n == cfg.steps:
            s = s.at(s0.t + cfg.t_end)
        log.debug(f'step {n} to t={s.t:.6g} took {time.perf_counter() - tick:.3f}s')
        if n % cfg.sample_stride == 0 or n == cfg.steps:
            sample(s)

    result.final = s
    log.info(f'run end: {len(result)} samples in {time.perf_counter() - started:.2f}s')
    return result
