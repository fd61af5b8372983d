"""Dyadic frequency localisation, homogeneous Besov and Chemin-Lerner norms.

Shells are built from a smooth radial ball bump ``χ`` (``≡ 1`` on ``r ≤ 1`` and
``≡ 0`` on ``r ≥ 4/3``) and the annulus bump ``φ(r) = χ(r/2) − χ(r)``. On a grid the
ladder of shells that touch some lattice mode is called *active*; the shells that
fit completely between the lowest wavenumber and the dealias cutoff are *resolved*.
Norms sum over resolved shells only.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import (
    TYPE_CHECKING,
    Dict,
    Generic,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
    Union,
)

import numpy as np
from scipy.integrate import trapezoid

from .base import SpectralField
from .errors import EmptyShellRange, GridMismatch, InsufficientSamples, NonMonotoneTimes
from .grid import (
    AMatrixField,
    GridSpec,
    ScalarField,
    dealiased_product,
    derivative,
    forward,
    inverse,
    random_scalar,
)
from .utils import format_exponent, parse_exponent

if TYPE_CHECKING:
    from .types import Exponent

    Fields = Union[SpectralField, Sequence[SpectralField]]

T = TypeVar('T')

__all__ = (
    'DyadicBump',
    'BUMP',
    'DyadicDecomposition',
    'decomposition',
    'BesovParams',
    'TimeSeries',
    'project_shell',
    'project_ball',
    'lebesgue_norm',
    'shell_norms',
    'besov_from_shells',
    'besov_norm',
    'chemin_lerner_from_shells',
    'chemin_lerner_norm',
    'bony_decompose',
    'shell_field',
    'plateau_field',
    'shell_kernel',
    'bernstein_ratio',
    'reverse_bernstein_ratio',
    'poincare_ratio',
    'interpolation_gap',
    'ProductLaw',
    'PRODUCT_LAWS',
    'product_ratio',
    'paraproduct_ratio',
    'remainder_ratio',
    'damped_heat_evolve',
)

log = logging.getLogger(__name__)


def _transition(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    positive = y > 0
    out[positive] = np.exp(-1.0 / y[positive])
    return out


@dataclass(frozen=True)
class DyadicBump:
    """The radial profile pair ``(χ, φ)``.

    ``χ`` moves from 1 to 0 between ``inner`` and ``outer`` through the classical
    ``exp(-1/y)`` smooth step.
    """

    inner: float = 1.0
    outer: float = 4 / 3

    def chi(self, r: np.ndarray, /) -> np.ndarray:
        x = (np.asarray(r, dtype=float) - self.inner) / (self.outer - self.inner)
        rising = _transition(x)
        falling = _transition(1.0 - x)
        return falling / (falling + rising)

    def phi(self, r: np.ndarray, /) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.chi(r / 2) - self.chi(r)

    @property
    def support(self) -> Tuple[float, float]:
        """Tuple[float, float]: Radii outside of which ``φ`` vanishes."""
        return (self.inner, 2 * self.outer)

    @property
    def plateau(self) -> Tuple[float, float]:
        """Tuple[float, float]: Radii between which ``φ ≡ 1``."""
        return (self.outer, 2 * self.inner)


BUMP = DyadicBump()


class DyadicDecomposition:
    """The shell ladder of one grid, with cached shell and ball multipliers.

    Parameters
    ----------
    grid: :class:`GridSpec`
        The grid to decompose.
    bump: :class:`DyadicBump`
        The radial profiles.

    Attributes
    ----------
    j_min: int
        Lowest resolved shell.
    j_max: int
        Highest resolved shell.
    j_lo: int
        Lowest active shell; below it ``φ_j`` vanishes on every lattice mode.
    j_hi: int
        Highest active shell; above it ``φ_j`` vanishes on every lattice mode.
    """

    __slots__ = ('grid', 'bump', 'j_min', 'j_max', 'j_lo', 'j_hi', '_shells', '_balls')

    def __init__(self, grid: GridSpec, bump: DyadicBump = BUMP, /) -> None:
        self.grid: GridSpec = grid
        self.bump: DyadicBump = bump

        xi_min = grid.unit
        xi_max = math.sqrt(3) * (grid.n / 2) * grid.unit
        ratio = bump.outer / bump.inner
        self.j_min: int = math.ceil(math.log2(xi_min * ratio) - 1e-12)
        self.j_max: int = math.floor(math.log2(grid.cutoff / ratio) + 1e-12)
        self.j_lo: int = math.floor(math.log2(xi_min / ratio))
        self.j_hi: int = math.ceil(math.log2(xi_max / bump.inner)) - 1

        self._shells: Dict[int, np.ndarray] = {}
        self._balls: Dict[int, np.ndarray] = {}

        if self.j_min > self.j_max:
            log.warning(f'{grid!r} resolves no complete dyadic shell')
        else:
            log.debug(
                f'{grid!r}: resolved shells [{self.j_min}, {self.j_max}], active [{self.j_lo}, {self.j_hi}]'
            )

    @property
    def resolved(self) -> range:
        """range: The resolved shells ``j_min..j_max`` (possibly empty)."""
        return range(self.j_min, self.j_max + 1)

    @property
    def active(self) -> range:
        return range(self.j_lo, self.j_hi + 1)

    def resolved_shells(self) -> range:
        """Like :attr:`resolved`, but raises :exc:`EmptyShellRange` when empty."""
        if self.j_min > self.j_max:
            raise EmptyShellRange(
                f'no resolved shell on {self.grid!r}: j_min={self.j_min} > j_max={self.j_max}'
            )
        return self.resolved

    def shell_multiplier(self, j: int, /) -> np.ndarray:
        """``φ(2^{-j}|ξ|)`` on the full lattice; zero at ``k = 0``."""
        try:
            return self._shells[j]
        except KeyError:
            pass
        if j < self.j_lo or j > self.j_hi:
            multiplier = np.zeros(self.grid.shape)
        else:
            multiplier = self.bump.phi(self.grid.kmag * 2.0**-j)
        multiplier.setflags(write=False)
        self._shells[j] = multiplier
        return multiplier

    def ball_multiplier(self, j: int, /) -> np.ndarray:
        """``χ(2^{-j}|ξ|)`` on the full lattice; one at ``k = 0``."""
        try:
            return self._balls[j]
        except KeyError:
            pass
        multiplier = self.bump.chi(self.grid.kmag * 2.0**-j)
        multiplier.setflags(write=False)
        self._balls[j] = multiplier
        return multiplier

    def plateau_mask(self, j: int, /) -> np.ndarray:
        lo, hi = self.bump.plateau
        r = self.grid.kmag * 2.0**-j
        return (r >= lo) & (r <= hi)

    def project_shell(self, f: T, j: int, /) -> T:
        """``Δ_j f`` for any ``j``; zero outside the active ladder :attr:`active`."""
        return f.with_modes(f.modes * self.shell_multiplier(j))  # type: ignore

    def project_ball(self, f: T, j: int, /) -> T:
        return f.with_modes(f.modes * self.ball_multiplier(j))  # type: ignore

    def covered_mask(self) -> np.ndarray:
        """Lattice modes where the resolved shells sum to one."""
        r = self.grid.kmag
        lo = 2.0**self.j_min * self.bump.outer
        hi = 2.0 ** (self.j_max + 1) * self.bump.inner
        return (r >= lo * (1 - 1e-12)) & (r <= hi * (1 + 1e-12))

    def partition_defect(self) -> float:
        """Largest ``|Σ_j φ_j − 1|`` over lattice modes the resolved shells fully cover."""
        shells = self.resolved_shells()
        total = sum(self.shell_multiplier(j) for j in shells)
        covered = self.covered_mask()
        if not covered.any():
            return 0.0
        return float(np.max(np.abs(total[covered] - 1.0)))  # type: ignore

    def shell_of(self, mask: np.ndarray, /) -> Optional[int]:
        """The shell with the largest weight at the first flagged mode, if any."""
        hits = np.argwhere(mask)
        if hits.size == 0:
            return None
        radius = float(self.grid.kmag[tuple(hits[0][-3:])])
        if radius == 0:
            return None
        weights = {j: float(self.bump.phi(radius * 2.0**-j)) for j in self.active}
        return max(weights, key=weights.__getitem__)

    def truncation_note(self) -> str:
        return (
            f'shells {self.j_min}..{self.j_max} resolved on n={self.grid.n}, L={self.grid.box_length:g}; '
            f'shells outside are excluded from every norm'
        )

    def __repr__(self) -> str:
        return f'<DyadicDecomposition resolved=[{self.j_min}, {self.j_max}] active=[{self.j_lo}, {self.j_hi}]>'


@lru_cache(maxsize=8)
def decomposition(grid: GridSpec, /) -> DyadicDecomposition:
    """The cached :class:`DyadicDecomposition` of ``grid`` with the default bump."""
    return DyadicDecomposition(grid)


def project_shell(f: T, j: int) -> T:
    """``Δ_j f``.

    The result is zero only outside the active ladder ``[j_lo, j_hi]``, which can reach
    past ``[j_min - 1, j_max + 1]``: the lowest lattice modes and the corners of the
    lattice may sit in shells the resolved ladder does not cover. ``Σ_j Δ_j f = f``
    holds exactly over the active ladder.
    """
    return decomposition(f.grid).project_shell(f, j)  # type: ignore


def project_ball(f: T, j: int) -> T:
    """``S_j f``; keeps the zero mode."""
    return decomposition(f.grid).project_ball(f, j)  # type: ignore


@dataclass(frozen=True)
class BesovParams:
    """Indices ``(s, p, q)`` of the homogeneous Besov space ``Ḃ^s_{p,q}``.

    ``p`` and ``q`` accept ``"inf"``.
    """

    s: float
    p: Exponent = 2.0
    q: Exponent = math.inf

    def __post_init__(self) -> None:
        object.__setattr__(self, 's', float(self.s))
        object.__setattr__(self, 'p', parse_exponent(self.p))
        object.__setattr__(self, 'q', parse_exponent(self.q))

    @property
    def label(self) -> str:
        return f'B({self.s:g},{format_exponent(self.p)},{format_exponent(self.q)})'  # type: ignore


@dataclass(frozen=True)
class TimeSeries(Generic[T]):
    """Samples ``(t_i, value_i)`` with strictly increasing times.

    Raises
    ------
    NonMonotoneTimes
        Times are not strictly increasing.
    GridMismatch
        Field samples live on different grids.
    """

    times: Tuple[float, ...]
    samples: Tuple[T, ...]

    def __post_init__(self) -> None:
        times = tuple(float(t) for t in self.times)
        samples = tuple(self.samples)
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'samples', samples)

        if len(times) != len(samples):
            raise ValueError(f'{len(times)} times for {len(samples)} samples')
        if any(b <= a for a, b in zip(times, times[1:])):
            raise NonMonotoneTimes(f'sample times must be strictly increasing: {times}')

        grids = {s.grid for s in _flatten_samples(samples)}
        if len(grids) > 1:
            raise GridMismatch('all samples of a series must share one grid')

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, T]], /) -> TimeSeries[T]:
        pairs = list(pairs)
        return cls(tuple(t for t, _ in pairs), tuple(v for _, v in pairs))

    def __len__(self) -> int:
        return len(self.times)


def _flatten_samples(samples: Iterable) -> List[SpectralField]:
    out: List[SpectralField] = []
    for sample in samples:
        if isinstance(sample, SpectralField):
            out.append(sample)
        elif isinstance(sample, (tuple, list)):
            out.extend(s for s in sample if isinstance(s, SpectralField))
    return out


def _components(f: Fields, /) -> Tuple[GridSpec, np.ndarray, np.ndarray, bool]:
    # stacked modes (C, n, n, n), per-row weights, reality
    fields = [f] if isinstance(f, SpectralField) else list(f)
    if not fields:
        raise ValueError('no field given')
    grid = fields[0].grid
    blocks, weights = [], []
    for field in fields:
        fields[0].check_grid(field)
        modes = field.modes.reshape((-1,) + grid.shape)
        blocks.append(modes)
        # an antisymmetric matrix holds each stored entry twice
        weight = 2.0 if isinstance(field, AMatrixField) else 1.0
        weights.extend([weight] * modes.shape[0])
    real = all(field.is_real for field in fields)
    return grid, np.concatenate(blocks), np.asarray(weights), real


def lebesgue_norm(values: np.ndarray, p: float, cell_volume: float, /) -> np.ndarray:
    """Collocation ``L^p`` norms over the last three axes.

    ``(cell_volume Σ|f|^p)^{1/p}``, or ``max |f|`` for ``p = ∞``.
    """
    magnitude = np.abs(values)
    if math.isinf(p):
        return magnitude.max(axis=(-3, -2, -1))
    if p == 2:
        return np.sqrt(cell_volume * np.sum(magnitude**2, axis=(-3, -2, -1)))
    return (cell_volume * np.sum(magnitude**p, axis=(-3, -2, -1))) ** (1 / p)


def shell_norms(f: Fields, p: Exponent, /, *, shells: Optional[Sequence[int]] = None) -> np.ndarray:
    """``‖Δ_j f^c‖_{L^p}`` per component ``c`` and shell ``j``.

    Parameters
    ----------
    f: Union[:class:`SpectralField`, Sequence[:class:`SpectralField`]]
        One field or several fields on the same grid; components are stacked.
    p: Union[float, str]
        Lebesgue exponent.
    shells: Optional[Sequence[int]]
        Shells to measure, the resolved ones by default.

    Returns
    -------
    :class:`numpy.ndarray`
        Shape ``(components, shells)``. Rows of antisymmetric matrix fields carry a
        factor two so summing rows gives the summed-entry norm of the full matrix.
    """
    grid, modes, weights, real = _components(f)
    p = parse_exponent(p)
    dyadic = decomposition(grid)
    shells = list(dyadic.resolved_shells() if shells is None else shells)

    out = np.zeros((modes.shape[0], len(shells)))
    for col, j in enumerate(shells):
        values = inverse(modes * dyadic.shell_multiplier(j))
        if real:
            values = values.real
        out[:, col] = weights * lebesgue_norm(values, p, grid.cell_volume)
    return out


def _lq(terms: np.ndarray, q: float, /) -> np.ndarray:
    if math.isinf(q):
        return terms.max(axis=-1, initial=0.0)
    return np.sum(terms**q, axis=-1) ** (1 / q)


def besov_from_shells(norms: np.ndarray, shells: Sequence[int], s: float, q: Exponent, /) -> float:
    """Reduces per-component shell norms ``(C, J)`` to a Besov norm summed over components."""
    weights = 2.0 ** (s * np.asarray(shells, dtype=float))
    return float(np.sum(_lq(np.asarray(norms) * weights, parse_exponent(q))))


def besov_norm(f: Fields, params: BesovParams, /) -> float:
    """``‖f‖_{Ḃ^s_{p,q}}`` over the resolved shells.

    Vector fields sum the norms of their components; antisymmetric matrix fields sum
    over all nine entries of the full matrix.

    Raises
    ------
    EmptyShellRange
        The grid resolves no shell.
    """
    grid = f.grid if isinstance(f, SpectralField) else f[0].grid
    shells = decomposition(grid).resolved_shells()
    norms = shell_norms(f, params.p, shells=shells)
    return besov_from_shells(norms, shells, params.s, params.q)


def chemin_lerner_from_shells(
    times: Sequence[float],
    norms: np.ndarray,
    shells: Sequence[int],
    r: Exponent,
    s: float,
    q: Exponent,
    /,
) -> float:
    """``‖f‖_{L̃^r(Ḃ^s_{p,q})}`` from recorded shell norms of shape ``(T, C, J)``.

    Raises
    ------
    NonMonotoneTimes
        ``times`` is not strictly increasing.
    InsufficientSamples
        Fewer than two samples with ``r < ∞``.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    r = parse_exponent(r)
    if np.any(np.diff(times) <= 0):
        raise NonMonotoneTimes('sample times must be strictly increasing')

    if math.isinf(r):
        if times.size == 0:
            raise InsufficientSamples('at least one sample is needed')
        per_shell = norms.max(axis=0)
    else:
        if times.size < 2:
            raise InsufficientSamples(f'time integrals need at least two samples, got {times.size}')
        per_shell = trapezoid(norms**r, times, axis=0) ** (1 / r)

    return besov_from_shells(per_shell, shells, s, q)


def chemin_lerner_norm(series: TimeSeries, r: Exponent, params: BesovParams, /) -> float:
    """``‖f‖_{L̃^r(Ḃ^s_{p,q})}`` of a sampled trajectory, trapezoidal in time."""
    if len(series) == 0:
        raise InsufficientSamples('empty series')
    first = series.samples[0]
    grid = first.grid if isinstance(first, SpectralField) else first[0].grid
    shells = decomposition(grid).resolved_shells()
    norms = np.stack([shell_norms(sample, params.p, shells=shells) for sample in series.samples])
    return chemin_lerner_from_shells(series.times, norms, shells, r, params.s, params.q)


def bony_decompose(f: ScalarField, g: ScalarField) -> Tuple[ScalarField, ScalarField, ScalarField]:
    """Splits ``fg`` into the paraproducts ``T_f g``, ``T_g f`` and the remainder ``R(f, g)``.

    ``T_f g = Σ_j S_{j-1}f Δ_j g`` and ``R(f, g) = Σ_{|j-j'| ≤ 1} Δ_j f Δ_{j'} g``.
    Every product is dealiased, and ``fg = T_f g + T_g f + R + f̂₀ĝ₀``.
    """
    f.check_grid(g)
    grid = f.grid
    dyadic = decomposition(grid)
    real = f.is_real and g.is_real

    def physical(modes: np.ndarray) -> np.ndarray:
        values = inverse(modes)
        return values.real if real else values

    f_shells = {j: physical(f.modes * dyadic.shell_multiplier(j)) for j in dyadic.active}
    g_shells = {j: physical(g.modes * dyadic.shell_multiplier(j)) for j in dyadic.active}
    zero = np.zeros(grid.shape, dtype=float if real else complex)

    tfg = zero.copy()
    tgf = zero.copy()
    rem = zero.copy()
    for j in dyadic.active:
        tfg += physical(f.modes * dyadic.ball_multiplier(j - 1)) * g_shells[j]
        tgf += physical(g.modes * dyadic.ball_multiplier(j - 1)) * f_shells[j]
        near = sum(g_shells.get(k, zero) for k in (j - 1, j, j + 1))
        rem += f_shells[j] * near

    mask = grid.dealias_mask
    return tuple(
        ScalarField._wrap(grid, forward(part) * mask, real) for part in (tfg, tgf, rem)
    )  # type: ignore


def shell_field(
    grid: GridSpec, j: int, rng: np.random.Generator, /, *, real: bool = True
) -> ScalarField:
    """A random field with ``Δ_j``-localised spectrum."""
    return random_scalar(grid, rng, real=real, band=decomposition(grid).shell_multiplier(j))


def plateau_field(
    grid: GridSpec, j: int, rng: np.random.Generator, /, *, real: bool = True
) -> ScalarField:
    """A random field supported where ``φ(2^{-j}|ξ|) = 1``, so ``Δ_j`` fixes it."""
    return random_scalar(grid, rng, real=real, band=decomposition(grid).plateau_mask(j))


def shell_kernel(grid: GridSpec, j: int, /) -> ScalarField:
    """``Δ_j δ`` centred at the origin, up to the factor ``L^{-3}``."""
    return ScalarField(grid, decomposition(grid).shell_multiplier(j), real=True)


def _lp(f: SpectralField, p: float) -> float:
    values = f.values()
    return float(np.sum(lebesgue_norm(values.reshape((-1,) + f.grid.shape), p, f.grid.cell_volume)))


def bernstein_ratio(f: ScalarField, j: int, gamma: Sequence[int], p: Exponent, q: Exponent) -> float:
    """``‖∂^γ f‖_q / (2^{j|γ| + 3j(1/p - 1/q)} ‖f‖_p)``; bounded for ``Δ_j``-localised ``f``."""
    p, q = parse_exponent(p), parse_exponent(q)
    order = sum(gamma)
    scale = 2.0 ** (j * order + 3 * j * (1 / p - 1 / q))
    return _lp(derivative(f, gamma), q) / (scale * _lp(f, p))


def _multi_indices(order: int) -> List[Tuple[int, int, int]]:
    return [(a, b, order - a - b) for a in range(order + 1) for b in range(order + 1 - a)]


def reverse_bernstein_ratio(f: ScalarField, j: int, order: int, p: Exponent) -> float:
    """``2^{j k} ‖f‖_p / sup_{|β| = k} ‖∂^β f‖_p``; bounded for annulus-localised ``f``."""
    p = parse_exponent(p)
    top = max(_lp(derivative(f, beta), p) for beta in _multi_indices(order))
    return 2.0 ** (j * order) * _lp(f, p) / top


def poincare_ratio(f: ScalarField, j: int, p: float) -> float:
    """``∫(-Δf)|f|^{p-2} f dx / (2^{2j} ∫|f|^p dx)`` for real ``f``; positive on shells."""
    if not 2 <= p < math.inf:
        raise ValueError(f'p must lie in [2, inf), got {p}')
    v = f.values().real
    minus_lap = inverse(f.grid.k2 * f.modes).real
    numerator = np.sum(minus_lap * np.abs(v) ** (p - 2) * v)
    denominator = 2.0 ** (2 * j) * np.sum(np.abs(v) ** p)
    return float(numerator / denominator)


def interpolation_gap(
    f: Fields, s1: float, s2: float, theta: float, /, *, p: Exponent = 2.0, q: Exponent = math.inf
) -> float:
    """``log‖f‖_{θs₁+(1-θ)s₂} − θ log‖f‖_{s₁} − (1-θ) log‖f‖_{s₂}``, which is ``≤ 0``."""
    grid = f.grid if isinstance(f, SpectralField) else f[0].grid
    shells = decomposition(grid).resolved_shells()
    norms = shell_norms(f, p, shells=shells)
    mid = besov_from_shells(norms, shells, theta * s1 + (1 - theta) * s2, q)
    a = besov_from_shells(norms, shells, s1, q)
    b = besov_from_shells(norms, shells, s2, q)
    return math.log(mid) - theta * math.log(a) - (1 - theta) * math.log(b)


@dataclass(frozen=True)
class ProductLaw:
    """One case of the Besov product law ``‖fg‖_{s₁+s₂-3/p} ≤ C‖f‖_{s₁}‖g‖_{s₂}``.

    ``q_f``, ``q_g`` and ``q_out`` are the summation indices of the three norms.
    """

    name: str
    q_f: float
    q_g: float
    q_out: float

    def admissible(self, s1: float, s2: float, p: float, /) -> bool:
        floor = 3 * max(0.0, 2 / p - 1)
        cap = 3 / p
        if self.name == 'a':
            return s1 <= cap and s2 <= cap and s1 + s2 > floor
        if self.name == 'b':
            return s1 < cap and s2 < cap and s1 + s2 > floor
        return s1 <= cap and s2 < cap and s1 + s2 >= floor


PRODUCT_LAWS: Tuple[ProductLaw, ...] = (
    ProductLaw('a', 1.0, 1.0, 1.0),
    ProductLaw('b', math.inf, math.inf, math.inf),
    ProductLaw('c', 1.0, math.inf, math.inf),
)


def product_ratio(
    f: ScalarField, g: ScalarField, law: ProductLaw, s1: float, s2: float, p: Exponent
) -> float:
    """``‖fg‖ / (‖f‖ ‖g‖)`` in the norms of ``law``.

    Raises
    ------
    ValueError
        ``(s1, s2, p)`` is outside the admissible set of ``law``.
    """
    p = parse_exponent(p)
    if not law.admissible(s1, s2, p):
        raise ValueError(f'(s1={s1}, s2={s2}, p={p}) is not admissible for case {law.name}')
    fg = dealiased_product(f, g)
    out = besov_norm(fg, BesovParams(s1 + s2 - 3 / p, p, law.q_out))
    return out / (besov_norm(f, BesovParams(s1, p, law.q_f)) * besov_norm(g, BesovParams(s2, p, law.q_g)))


def paraproduct_ratio(f: ScalarField, g: ScalarField, s: float, p: Exponent, q: Exponent) -> float:
    """``‖T_f g‖_{Ḃ^s_{p,q}} / (‖f‖_∞ ‖g‖_{Ḃ^s_{p,q}})``."""
    tfg, _, _ = bony_decompose(f, g)
    params = BesovParams(s, p, q)
    return besov_norm(tfg, params) / (_lp(f, math.inf) * besov_norm(g, params))


def remainder_ratio(
    f: ScalarField,
    g: ScalarField,
    s1: float,
    s2: float,
    p1: Exponent,
    p2: Exponent,
    p: Exponent,
    q: Exponent = math.inf,
) -> float:
    """``‖R(f, g)‖_{Ḃ^σ_{p,q}} / (‖f‖_{Ḃ^{s₁}_{p₁,q}} ‖g‖_{Ḃ^{s₂}_{p₂,∞}})``.

    ``σ = s₁ + s₂ − 3(1/p₁ + 1/p₂ − 1/p)``; requires ``s₁ + s₂ > 0`` and
    ``1/p ≤ 1/p₁ + 1/p₂ ≤ 1``.
    """
    p1, p2, p = parse_exponent(p1), parse_exponent(p2), parse_exponent(p)
    inv = 1 / p1 + 1 / p2
    if not (s1 + s2 > 0 and 1 / p <= inv <= 1):
        raise ValueError('remainder indices outside the admissible set')
    sigma = s1 + s2 - 3 * (inv - 1 / p)
    _, _, rem = bony_decompose(f, g)
    return besov_norm(rem, BesovParams(sigma, p, q)) / (
        besov_norm(f, BesovParams(s1, p1, q)) * besov_norm(g, BesovParams(s2, p2, math.inf))
    )


def damped_heat_evolve(
    u0: ScalarField,
    times: Sequence[float],
    /,
    *,
    forcing: Optional[ScalarField] = None,
    nu1: float = 1.0,
    nu2: float = 0.0,
) -> TimeSeries[ScalarField]:
    """Exact solution of ``∂_t u − ν₁Δu + ν₂u = f`` with time-independent ``f``.

    Per mode ``û(t) = e^{-at}û₀ + (1 − e^{-at})/a · f̂`` with ``a = ν₁|ξ|² + ν₂``.
    """
    if not nu1 > 0 or nu2 < 0:
        raise ValueError(f'need nu1 > 0 and nu2 >= 0, got {nu1}, {nu2}')
    grid = u0.grid
    rate = nu1 * grid.k2 + nu2
    f_modes = np.zeros(grid.shape, dtype=complex) if forcing is None else forcing.modes
    real = u0.is_real and (forcing is None or forcing.is_real)

    samples = []
    for t in times:
        decay = np.exp(-rate * t)
        # (1 - e^{-at})/a, equal to t at a = 0
        weight = np.where(rate > 0, -np.expm1(-rate * t) / np.where(rate > 0, rate, 1.0), t)
        samples.append(ScalarField._wrap(grid, decay * u0.modes + weight * f_modes, real))
    return TimeSeries(tuple(times), tuple(samples))
