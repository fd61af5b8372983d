"""Spectral representation of fields on the periodic box [0, L)³.

Coefficients follow ``f(x) = Σ_k f̂_k exp(i ξ_k·x)`` with ``ξ_k = 2πk/L``, i.e. the
forward transform is normalised by ``1/n³`` (``norm="forward"``). Every operation
here is a Fourier multiplier or a collocation product and returns a fresh field.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
import scipy.fft

from .base import SpectralField
from .errors import GridMismatch, InvalidGrid, UnsupportedOrder

if TYPE_CHECKING:
    F = TypeVar('F', bound=SpectralField)

__all__ = (
    'GridSpec',
    'ScalarField',
    'VectorField',
    'AMatrixField',
    'fft_workers',
    'forward',
    'inverse',
    'derivative',
    'lambda_power',
    'leray_project',
    'dealiased_product',
    'gradient',
    'divergence',
    'curl',
    'laplacian',
    'resample',
    'random_scalar',
    'random_vector',
    'MAX_DERIVATIVE_ORDER',
)

log = logging.getLogger(__name__)

MAX_DERIVATIVE_ORDER: int = 4

_AXES = (-3, -2, -1)


def fft_workers() -> int:
    """Worker count handed to :mod:`scipy.fft`, capped by ``MICROPOLAR_THREADS``."""
    cap = os.environ.get('MICROPOLAR_THREADS')
    if cap:
        try:
            return max(1, int(cap))
        except ValueError:
            log.warning(f'ignoring non-integer MICROPOLAR_THREADS={cap!r}')
    return os.cpu_count() or 1


def forward(values: np.ndarray, /) -> np.ndarray:
    """Physical values to Fourier coefficients over the last three axes."""
    return scipy.fft.fftn(values, axes=_AXES, norm='forward', workers=fft_workers())


def inverse(modes: np.ndarray, /) -> np.ndarray:
    """Fourier coefficients to physical values over the last three axes."""
    return scipy.fft.ifftn(modes, axes=_AXES, norm='forward', workers=fft_workers())


@dataclass(frozen=True)
class GridSpec:
    """A periodic grid of ``n³`` collocation points on the box ``[0, L)³``.

    Parameters
    ----------
    n: int
        Points per axis; a power of two, at least 16.
    box_length: float
        Box side ``L``.
    dealias_fraction: float
        Modes with any ``|k_i| > dealias_fraction·n/2`` are removed from products.
    """

    n: int = 128
    box_length: float = 32 * math.pi
    dealias_fraction: float = 2 / 3

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 16 or self.n & (self.n - 1):
            raise InvalidGrid(f'n must be a power of two and at least 16, got {self.n!r}')
        if not self.box_length > 0:
            raise InvalidGrid(f'box_length must be positive, got {self.box_length!r}')
        if not 0 < self.dealias_fraction <= 1:
            raise InvalidGrid(f'dealias_fraction must lie in (0, 1], got {self.dealias_fraction!r}')

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def unit(self) -> float:
        """float: Lattice spacing ``2π/L`` in wavenumber space."""
        return 2 * math.pi / self.box_length

    @property
    def volume(self) -> float:
        return self.box_length**3

    @property
    def cell_volume(self) -> float:
        return (self.box_length / self.n) ** 3

    @property
    def kmax_retained(self) -> int:
        """int: Largest integer ``|k_i|`` kept by the dealias mask."""
        return int(math.floor(self.dealias_fraction * self.n / 2 + 1e-12))

    @property
    def cutoff(self) -> float:
        """float: Dealias cutoff in physical wavenumber units."""
        return self.dealias_fraction * self.n / 2 * self.unit

    @property
    def max_resolved_k2(self) -> float:
        """float: Largest ``|ξ|²`` inside the dealias mask."""
        return 3 * (self.kmax_retained * self.unit) ** 2

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """:class:`numpy.ndarray`: Integer wavenumbers in FFT order, in ``[-n/2, n/2)``."""
        return np.rint(scipy.fft.fftfreq(self.n, d=1.0 / self.n)).astype(np.int64)

    @cached_property
    def xi(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Tuple[:class:`numpy.ndarray`, ...]: Broadcastable physical wavenumber axes."""
        k = self.wavenumbers * self.unit
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    @cached_property
    def k2(self) -> np.ndarray:
        """:class:`numpy.ndarray`: ``|ξ|²`` on the full lattice."""
        x1, x2, x3 = self.xi
        return x1**2 + x2**2 + x3**2

    @cached_property
    def kmag(self) -> np.ndarray:
        """:class:`numpy.ndarray`: ``|ξ|`` on the full lattice."""
        return np.sqrt(self.k2)

    @cached_property
    def unit_xi(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Tuple[:class:`numpy.ndarray`, ...]: ``ξ/|ξ|`` components, zero at ``k = 0``."""
        inv = np.divide(1.0, self.kmag, out=np.zeros(self.shape), where=self.kmag > 0)
        x1, x2, x3 = self.xi
        return (x1 * inv, x2 * inv, x3 * inv)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """:class:`numpy.ndarray`: Boolean mask of retained modes."""
        keep = np.abs(self.wavenumbers) <= self.kmax_retained
        return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]

    @cached_property
    def first_derivatives(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Tuple[:class:`numpy.ndarray`, ...]: Full-shape multipliers of ``∂₁, ∂₂, ∂₃``."""
        return tuple(
            np.ascontiguousarray(self.derivative_multiplier(e)) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))
        )  # type: ignore

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable collocation coordinates ``x_i = i·L/n``."""
        x = np.arange(self.n) * (self.box_length / self.n)
        return (x[:, None, None], x[None, :, None], x[None, None, :])

    def refined(self, factor: int = 2, /) -> GridSpec:
        return GridSpec(self.n * factor, self.box_length, self.dealias_fraction)

    def derivative_multiplier(self, alpha: Sequence[int], /) -> np.ndarray:
        """Multiplier ``(iξ)^α``, with the Nyquist plane of odd-order axes zeroed."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != 3 or any(a < 0 for a in alpha):
            raise UnsupportedOrder(f'multi-index must have three non-negative entries, got {alpha}')
        if sum(alpha) > MAX_DERIVATIVE_ORDER:
            raise UnsupportedOrder(
                f'derivative order {sum(alpha)} exceeds {MAX_DERIVATIVE_ORDER}'
            )

        multiplier: Union[np.ndarray, complex] = 1.0 + 0j
        for axis, order in enumerate(alpha):
            if order == 0:
                continue
            factor = (1j * self.xi[axis]) ** order
            if order % 2:
                factor = np.where(self.wavenumbers.reshape(self.xi[axis].shape) == -self.n // 2, 0, factor)
            multiplier = multiplier * factor
        return np.broadcast_to(multiplier, self.shape)

    def __repr__(self) -> str:
        return f'<GridSpec n={self.n} L={self.box_length:g} dealias={self.dealias_fraction:g}>'


class ScalarField(SpectralField):
    """A scalar field ``f`` with coefficients of shape ``(n, n, n)``."""

    __slots__ = ()

    @classmethod
    def _component_shape(cls) -> Tuple[int, ...]:
        return ()

    @classmethod
    def from_values(cls, grid: GridSpec, values: np.ndarray, /) -> ScalarField:
        """Transforms collocation values; real input yields a real-flagged field."""
        values = np.asarray(values)
        return cls._wrap(grid, forward(values), np.isrealobj(values))

    def values(self) -> np.ndarray:
        """Collocation values; real part only when the field is flagged real."""
        out = inverse(self._modes)
        return out.real if self._real else out


class VectorField(SpectralField):
    """A vector field with coefficients of shape ``(3, n, n, n)``."""

    __slots__ = ()

    @classmethod
    def _component_shape(cls) -> Tuple[int, ...]:
        return (3,)

    @classmethod
    def from_values(cls, grid: GridSpec, values: np.ndarray, /) -> VectorField:
        values = np.asarray(values)
        return cls._wrap(grid, forward(values), np.isrealobj(values))

    @classmethod
    def from_components(cls, *components: ScalarField) -> VectorField:
        if len(components) != 3:
            raise GridMismatch(f'a vector field needs three components, got {len(components)}')
        first = components[0]
        for c in components[1:]:
            first.check_grid(c)
        real = all(c.is_real for c in components)
        return cls._wrap(first.grid, np.stack([c.modes for c in components]), real)

    @property
    def components(self) -> Tuple[ScalarField, ScalarField, ScalarField]:
        """Tuple[:class:`ScalarField`, ...]: The three components ``u¹, u², u³``."""
        return tuple(ScalarField._wrap(self._grid, self._modes[i], self._real) for i in range(3))  # type: ignore

    def values(self) -> np.ndarray:
        out = inverse(self._modes)
        return out.real if self._real else out

    def dot_xi(self) -> np.ndarray:
        """Per-mode ``ξ·v̂``."""
        x1, x2, x3 = self._grid.xi
        return x1 * self._modes[0] + x2 * self._modes[1] + x3 * self._modes[2]


class AMatrixField(SpectralField):
    """An antisymmetric 3×3 matrix field stored by its entries ``(a₁₂, a₁₃, a₂₃)``."""

    __slots__ = ()

    ENTRIES: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 2), (1, 2))

    @classmethod
    def _component_shape(cls) -> Tuple[int, ...]:
        return (3,)

    def full(self) -> np.ndarray:
        """Coefficients of the full matrix, shape ``(3, 3, n, n, n)``; ``M + Mᵀ = 0`` exactly."""
        out = np.zeros((3, 3) + self._grid.shape, dtype=np.complex128)
        for slot, (i, j) in enumerate(self.ENTRIES):
            out[i, j] = self._modes[slot]
            out[j, i] = -self._modes[slot]
        return out

    def entry(self, i: int, j: int, /) -> ScalarField:
        """The ``(i, j)`` entry, zero-based."""
        if i == j:
            return ScalarField.zeros(self._grid, real=self._real)
        sign = 1
        if i > j:
            i, j, sign = j, i, -1
        slot = self.ENTRIES.index((i, j))
        return ScalarField._wrap(self._grid, sign * self._modes[slot], self._real)

    def values(self) -> np.ndarray:
        out = inverse(self._modes)
        return out.real if self._real else out


def derivative(f: F, alpha: Sequence[int]) -> F:
    """Applies ``∂^α`` to every component of ``f``.

    Parameters
    ----------
    f: :class:`SpectralField`
        Any field.
    alpha: Sequence[int]
        Multi-index of total order at most four.

    Raises
    ------
    UnsupportedOrder
        The order is negative or above four.
    """
    multiplier = f.grid.derivative_multiplier(alpha)
    real = f.is_real
    return f.with_modes(f.modes * multiplier, real=real)


def _lambda_multiplier(grid: GridSpec, s: float) -> np.ndarray:
    if s == 0:
        return np.ones(grid.shape)
    out = np.zeros(grid.shape)
    np.power(grid.kmag, s, out=out, where=grid.kmag > 0)
    return out


def lambda_power(f: F, s: float) -> F:
    """Applies ``Λ^s``; the zero mode is annihilated whenever ``s ≠ 0``.

    Raises
    ------
    UnsupportedOrder
        ``s`` lies outside ``[-2, 2]``.
    """
    if not -2 <= s <= 2:
        raise UnsupportedOrder(f'Lambda exponent must lie in [-2, 2], got {s}')
    return f.with_modes(f.modes * _lambda_multiplier(f.grid, s))


def leray_project(v: VectorField) -> VectorField:
    """Projects ``v`` onto divergence-free fields: ``v̂ − ξ(ξ·v̂)/|ξ|²``.

    The zero mode passes through unchanged.
    """
    grid = v.grid
    e1, e2, e3 = grid.unit_xi
    modes = v.modes
    parallel = e1 * modes[0] + e2 * modes[1] + e3 * modes[2]
    out = np.stack([modes[0] - e1 * parallel, modes[1] - e2 * parallel, modes[2] - e3 * parallel])
    return v.with_modes(out)


def dealiased_product(f: ScalarField, g: ScalarField) -> ScalarField:
    """Pointwise product by collocation, followed by the dealias mask."""
    f.check_grid(g)
    grid = f.grid
    real = f.is_real and g.is_real
    fv, gv = inverse(f.modes), inverse(g.modes)
    if real:
        fv, gv = fv.real, gv.real
    product = forward(fv * gv)
    return ScalarField._wrap(grid, product * grid.dealias_mask, real)


def gradient(f: ScalarField) -> VectorField:
    d1, d2, d3 = f.grid.first_derivatives
    g = f.modes
    return VectorField._wrap(f.grid, np.stack([d1 * g, d2 * g, d3 * g]), f.is_real)


def divergence(v: VectorField) -> ScalarField:
    d1, d2, d3 = v.grid.first_derivatives
    a = v.modes
    return ScalarField._wrap(v.grid, d1 * a[0] + d2 * a[1] + d3 * a[2], v.is_real)


def curl(v: VectorField) -> VectorField:
    d1, d2, d3 = v.grid.first_derivatives
    a = v.modes
    modes = np.stack([d2 * a[2] - d3 * a[1], d3 * a[0] - d1 * a[2], d1 * a[1] - d2 * a[0]])
    return v.with_modes(modes)


def laplacian(f: F) -> F:
    return f.with_modes(-f.grid.k2 * f.modes)


def _index_map(n_from: int, n_to: int) -> Tuple[np.ndarray, np.ndarray]:
    m = min(n_from, n_to)
    k = np.arange(-(m // 2) + 1, m // 2)
    return k % n_from, k % n_to


def resample(f: F, grid: GridSpec) -> F:
    """Zero-pads or truncates ``f`` onto ``grid`` (same box length).

    Modes at the Nyquist index of the smaller grid are dropped.
    """
    if not math.isclose(grid.box_length, f.grid.box_length, rel_tol=1e-14):
        raise GridMismatch('resampling requires equal box lengths')
    src, dst = _index_map(f.grid.n, grid.n)
    lead = f.modes.shape[:-3]
    out = np.zeros(lead + grid.shape, dtype=np.complex128)
    out[(...,) + np.ix_(dst, dst, dst)] = f.modes[(...,) + np.ix_(src, src, src)]
    return type(f)._wrap(grid, out, f.is_real)


def random_scalar(
    grid: GridSpec,
    rng: np.random.Generator,
    /,
    *,
    real: bool = True,
    band: Optional[np.ndarray] = None,
) -> ScalarField:
    """A random mean-free field inside the dealias band.

    Parameters
    ----------
    grid: :class:`GridSpec`
        Target grid.
    rng: :class:`numpy.random.Generator`
        Source of randomness.
    real: bool
        Whether the field is real-valued.
    band: Optional[:class:`numpy.ndarray`]
        Extra multiplier (e.g. a shell mask) applied after the dealias mask.
    """
    values = rng.standard_normal(grid.shape)
    if not real:
        values = values + 1j * rng.standard_normal(grid.shape)
    modes = forward(values) * grid.dealias_mask
    if band is not None:
        modes = modes * band
    modes[0, 0, 0] = 0
    return ScalarField._wrap(grid, modes, real)


def random_vector(
    grid: GridSpec,
    rng: np.random.Generator,
    /,
    *,
    real: bool = True,
    band: Optional[np.ndarray] = None,
    solenoidal: bool = False,
) -> VectorField:
    """Three independent :func:`random_scalar` components, optionally Leray-projected."""
    v = VectorField.from_components(
        *(random_scalar(grid, rng, real=real, band=band) for _ in range(3))
    )
    return leray_project(v) if solenoidal else v
