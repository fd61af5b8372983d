"""The micropolar system, its Leray-projected form and the transformed variables.

Primitive variables are the velocity ``u`` (divergence-free) and the micro-rotation
``ω``. The transformed variables are

* ``u_A``, the antisymmetric matrix of ``u`` (``(v_A)_{ij} = ε_{ijk} v_k``),
* ``ω_Ω = Λ⁻¹ (∇×ω)_A``, the rotational part of ``ω``,
* ``ω_d = Λ⁻¹ div ω``, the gradient part of ``ω``,

together with the zero mode of ``ω``, which neither part can represent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import DivergenceViolation, InconsistentState, InvalidParameters
from .grid import (
    AMatrixField,
    GridSpec,
    ScalarField,
    VectorField,
    curl,
    divergence,
    forward,
    gradient,
    inverse,
    lambda_power,
    laplacian,
    leray_project,
)

__all__ = (
    'CURL_SIGN',
    'PhysicalParams',
    'State',
    'TransformedState',
    'TransformedTendency',
    'divergence_residual',
    'to_antisymmetric',
    'from_antisymmetric',
    'curl_matrix',
    'row_divergence',
    'decompose_omega',
    'reconstruct_omega',
    'transform',
    'to_state',
    'transform_tendency',
    'convection',
    'nonlinear_terms',
    'rhs_projected',
    'rhs_transformed',
    'energy',
)

log = logging.getLogger(__name__)

#: ``(∇×z)_A = CURL_SIGN · curl_matrix(z)`` for every vector field ``z``.
CURL_SIGN: int = -1

DIVERGENCE_TOLERANCE: float = 1e-10


@dataclass(frozen=True)
class PhysicalParams:
    """Viscosity coefficients of the micropolar system.

    Parameters
    ----------
    chi: float
        Micro-rotation viscosity ``χ``.
    nu: float
        Kinematic viscosity ``ν``.
    kappa: float
        Angular viscosity ``κ``.
    mu: float
        Angular viscosity ``μ``.

    Raises
    ------
    InvalidParameters
        A coefficient is negative, ``χ + ν`` is zero or ``μ`` is zero.
    """

    chi: float = 0.5
    nu: float = 0.5
    kappa: float = 1.0
    mu: float = 1.0

    def __post_init__(self) -> None:
        violations = [
            f'{name} must be nonnegative, got {value}'
            for name, value in (('chi', self.chi), ('nu', self.nu), ('kappa', self.kappa), ('mu', self.mu))
            if value < 0
        ]
        if not self.chi + self.nu > 0:
            violations.append('chi + nu must be positive')
        if not self.mu > 0:
            violations.append('mu must be positive')
        if violations:
            raise InvalidParameters('; '.join(violations))

    @property
    def is_default(self) -> bool:
        """bool: Whether these are the coefficients the transformed system is written for."""
        return self == PhysicalParams()


def divergence_residual(u: VectorField, /) -> float:
    """``max_k |ξ̂·û_k| / max_k |û_k|``; zero for the zero field."""
    scale = float(np.max(np.abs(u.modes), initial=0.0))
    if scale == 0:
        return 0.0
    e1, e2, e3 = u.grid.unit_xi
    m = u.modes
    return float(np.max(np.abs(e1 * m[0] + e2 * m[1] + e3 * m[2])) / scale)


class State:
    """A primitive state ``(u, ω)`` at time ``t``.

    Parameters
    ----------
    u: :class:`VectorField`
        The velocity; must be divergence-free.
    omega: :class:`VectorField`
        The micro-rotation.
    t: float
        Time, nonnegative.

    Raises
    ------
    DivergenceViolation
        The divergence residual of ``u`` exceeds the tolerance.
    """

    __slots__ = ('u', 'omega', 't')

    def __init__(
        self,
        u: VectorField,
        omega: VectorField,
        t: float = 0.0,
        /,
        *,
        tolerance: float = DIVERGENCE_TOLERANCE,
    ) -> None:
        u.check_grid(omega)
        if t < 0:
            raise ValueError(f'time must be nonnegative, got {t}')
        residual = divergence_residual(u)
        if residual > tolerance:
            raise DivergenceViolation(residual, tolerance)

        self.u: VectorField = u
        self.omega: VectorField = omega
        self.t: float = float(t)

    @classmethod
    def zero(cls, grid: GridSpec, /) -> State:
        return cls(VectorField.zeros(grid), VectorField.zeros(grid))

    @property
    def grid(self) -> GridSpec:
        """:class:`GridSpec`: The grid shared by ``u`` and ``omega``."""
        return self.u.grid

    @property
    def is_real(self) -> bool:
        return self.u.is_real and self.omega.is_real

    def at(self, t: float, /) -> State:
        return State(self.u, self.omega, t, tolerance=np.inf)

    def __repr__(self) -> str:
        return f'<State t={self.t:g} grid={self.grid!r}>'


class TransformedState:
    """The transformed variables ``(u_A, ω_Ω, ω_d)`` plus the zero mode of ``ω``.

    Attributes
    ----------
    u_A: :class:`AMatrixField`
    omega_Omega: :class:`AMatrixField`
    omega_d: :class:`ScalarField`
    omega_mean: :class:`numpy.ndarray`
        The ``k = 0`` coefficient vector of ``ω``, shape ``(3,)``.
    t: float
    """

    __slots__ = ('u_A', 'omega_Omega', 'omega_d', 'omega_mean', 't')

    def __init__(
        self,
        u_A: AMatrixField,
        omega_Omega: AMatrixField,
        omega_d: ScalarField,
        t: float = 0.0,
        /,
        *,
        omega_mean: Optional[np.ndarray] = None,
    ) -> None:
        u_A.check_grid(omega_Omega)
        u_A.check_grid(omega_d)
        self.u_A: AMatrixField = u_A
        self.omega_Omega: AMatrixField = omega_Omega
        self.omega_d: ScalarField = omega_d
        mean = np.zeros(3, dtype=complex) if omega_mean is None else np.array(omega_mean, dtype=complex)
        mean.setflags(write=False)
        self.omega_mean: np.ndarray = mean
        self.t: float = float(t)

    @property
    def grid(self) -> GridSpec:
        return self.u_A.grid

    @property
    def is_real(self) -> bool:
        return self.u_A.is_real and self.omega_Omega.is_real and self.omega_d.is_real

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """The raw coefficient arrays ``(u_A, ω_Ω, ω_d, ω̄)``."""
        return self.u_A.modes, self.omega_Omega.modes, self.omega_d.modes, self.omega_mean

    @classmethod
    def from_arrays(
        cls,
        grid: GridSpec,
        u_A: np.ndarray,
        omega_Omega: np.ndarray,
        omega_d: np.ndarray,
        omega_mean: np.ndarray,
        t: float,
        /,
        *,
        real: bool = True,
        real_omega: Optional[bool] = None,
    ) -> TransformedState:
        """Wraps raw arrays without copying them; they are frozen in place. ``real_omega`` defaults to ``real``."""
        real_omega = real if real_omega is None else real_omega
        return cls(
            AMatrixField._wrap(grid, u_A, real),
            AMatrixField._wrap(grid, omega_Omega, real_omega),
            ScalarField._wrap(grid, omega_d, real_omega),
            t,
            omega_mean=omega_mean,
        )

    def distance(self, other: TransformedState, /) -> float:
        """Largest coefficient difference relative to the largest coefficient of ``self``."""
        mine, theirs = self.arrays(), other.arrays()
        scale = max(float(np.max(np.abs(a), initial=0.0)) for a in mine)
        diff = max(float(np.max(np.abs(a - b), initial=0.0)) for a, b in zip(mine, theirs))
        if scale == 0:
            return diff
        return diff / scale

    def __repr__(self) -> str:
        return f'<TransformedState t={self.t:g} grid={self.grid!r}>'


class TransformedTendency(NamedTuple):
    """Time derivatives of the transformed variables."""

    u_A: AMatrixField
    omega_Omega: AMatrixField
    omega_d: ScalarField
    omega_mean: np.ndarray


def to_antisymmetric(u: VectorField) -> AMatrixField:
    """``u_A`` with entries ``(1,2) = u³``, ``(1,3) = −u²``, ``(2,3) = u¹``."""
    m = u.modes
    return AMatrixField._wrap(u.grid, np.stack([m[2], -m[1], m[0]]), u.is_real)


def from_antisymmetric(a: AMatrixField) -> VectorField:
    """Inverse of :func:`to_antisymmetric`."""
    m = a.modes
    return VectorField._wrap(a.grid, np.stack([m[2], -m[1], m[0]]), a.is_real)


def curl_matrix(z: VectorField) -> AMatrixField:
    """The matrix ``(curl z)_{ij} = ∂_j z^i − ∂_i z^j``."""
    d1, d2, d3 = z.grid.first_derivatives
    m = z.modes
    entries = np.stack([d2 * m[0] - d1 * m[1], d3 * m[0] - d1 * m[2], d3 * m[1] - d2 * m[2]])
    return AMatrixField._wrap(z.grid, entries, z.is_real)


def row_divergence(a: AMatrixField) -> VectorField:
    """Row-wise divergence ``(Σ_j ∂_j M_{ij})_i`` of an antisymmetric matrix field."""
    d1, d2, d3 = a.grid.first_derivatives
    a12, a13, a23 = a.modes
    rows = np.stack([d2 * a12 + d3 * a13, -d1 * a12 + d3 * a23, -d1 * a13 - d2 * a23])
    return VectorField._wrap(a.grid, rows, a.is_real)


def decompose_omega(omega: VectorField) -> Tuple[ScalarField, AMatrixField]:
    """``(ω_d, ω_Ω) = (Λ⁻¹ div ω, CURL_SIGN · Λ⁻¹ curl_matrix(ω))``; both zero-mode-free."""
    omega_d = lambda_power(divergence(omega), -1)
    omega_Omega = lambda_power(curl_matrix(omega), -1) * CURL_SIGN
    return omega_d, omega_Omega


def reconstruct_omega(omega_d: ScalarField, omega_Omega: AMatrixField) -> VectorField:
    """``ω = −Λ⁻¹∇ω_d + Λ⁻¹ div ω_Ω``, inverse of :func:`decompose_omega` off the zero mode."""
    omega_d.check_grid(omega_Omega)
    return lambda_power(row_divergence(omega_Omega), -1) - lambda_power(gradient(omega_d), -1)


def _with_mean(v: VectorField, mean: np.ndarray) -> VectorField:
    modes = np.array(v.modes)
    modes[:, 0, 0, 0] = mean
    return v.with_modes(modes)


def transform(s: State) -> TransformedState:
    """Maps a primitive state to the transformed variables."""
    omega_d, omega_Omega = decompose_omega(s.omega)
    return TransformedState(
        to_antisymmetric(s.u), omega_Omega, omega_d, s.t, omega_mean=s.omega.modes[:, 0, 0, 0]
    )


def to_state(ts: TransformedState, /, *, tolerance: float = DIVERGENCE_TOLERANCE) -> State:
    """Reconstructs ``(u, ω)`` from the transformed variables."""
    u = from_antisymmetric(ts.u_A)
    omega = _with_mean(reconstruct_omega(ts.omega_d, ts.omega_Omega), ts.omega_mean)
    return State(u, omega, ts.t, tolerance=tolerance)


def transform_tendency(du: VectorField, domega: VectorField) -> TransformedTendency:
    """Applies the (linear) change of variables to a pair of primitive tendencies."""
    omega_d, omega_Omega = decompose_omega(domega)
    return TransformedTendency(
        to_antisymmetric(du), omega_Omega, omega_d, np.array(domega.modes[:, 0, 0, 0])
    )


def convection(u: VectorField, v: VectorField, /, *, dealias: bool = True) -> VectorField:
    """``(u·∇)v = Σ_i u^i ∂_i v`` by collocation, dealiased unless told otherwise."""
    u.check_grid(v)
    grid = u.grid
    real = u.is_real and v.is_real

    def physical(modes: np.ndarray) -> np.ndarray:
        values = inverse(modes)
        return values.real if real else values

    u_values = physical(u.modes)
    total = np.zeros_like(u_values)
    for i, d in enumerate(grid.first_derivatives):
        total += u_values[i] * physical(d * v.modes)
    modes = forward(total)
    if dealias:
        modes *= grid.dealias_mask
    return VectorField._wrap(grid, modes, real)


def nonlinear_terms(s: State, /, *, dealias: bool = True) -> Tuple[VectorField, VectorField]:
    """``(P(u·∇u), u·∇ω)``."""
    return (
        leray_project(convection(s.u, s.u, dealias=dealias)),
        convection(s.u, s.omega, dealias=dealias),
    )


def rhs_projected(
    s: State,
    params: PhysicalParams = PhysicalParams(),
    /,
    *,
    nonlinear: bool = True,
    dealias: bool = True,
) -> Tuple[VectorField, VectorField]:
    """Tendencies of the Leray-projected system.

    ``∂_t u = (χ+ν)Δu − P(u·∇u) + 2χ∇×ω`` and
    ``∂_t ω = μΔω − u·∇ω − 4χω + κ∇div ω + 2χ∇×u``.

    Parameters
    ----------
    s: :class:`State`
        The current state.
    params: :class:`PhysicalParams`
        Viscosity coefficients.
    nonlinear: bool
        Whether to include the convection terms.
    dealias: bool
        Whether convection products are dealiased.
    """
    u, omega = s.u, s.omega
    du = laplacian(u) * (params.chi + params.nu) + curl(omega) * (2 * params.chi)
    domega = (
        laplacian(omega) * params.mu
        - omega * (4 * params.chi)
        + gradient(divergence(omega)) * params.kappa
        + curl(u) * (2 * params.chi)
    )
    if nonlinear:
        nu, nw = nonlinear_terms(s, dealias=dealias)
        du = du - nu
        domega = domega - nw
    return du, domega


def _check_consistent(ts: TransformedState, s: State, tolerance: float) -> None:
    if ts.grid != s.grid:
        raise InconsistentState('transformed and primitive states live on different grids')
    defect = transform(s).distance(ts)
    if defect > tolerance:
        raise InconsistentState(f'transformed state differs from transform(state) by {defect:.3e}')


def rhs_transformed(
    ts: TransformedState,
    s: State,
    /,
    *,
    nonlinear: bool = True,
    dealias: bool = True,
    check: bool = True,
    tolerance: float = 1e-8,
) -> TransformedTendency:
    """Tendencies of the transformed system at the default coefficients.

    ``∂_t u_A = Δu_A + Λω_Ω − (P(u·∇u))_A``,
    ``∂_t ω_Ω = Δω_Ω − 2ω_Ω + Λu_A − Λ⁻¹(∇×(u·∇ω))_A`` and
    ``∂_t ω_d = 2Δω_d − 2ω_d − Λ⁻¹div(u·∇ω)``. The zero mode of ``ω`` decays like
    ``e^{-2t}`` forced by the mean of ``−u·∇ω``.

    Raises
    ------
    InconsistentState
        ``ts`` is not the transform of ``s`` (only when ``check`` is set).
    """
    if check:
        _check_consistent(ts, s, tolerance)

    du_A = laplacian(ts.u_A) + lambda_power(ts.omega_Omega, 1)
    dOmega = laplacian(ts.omega_Omega) - ts.omega_Omega * 2 + lambda_power(ts.u_A, 1)
    dd = laplacian(ts.omega_d) * 2 - ts.omega_d * 2
    dmean = -2 * ts.omega_mean

    if nonlinear:
        nu, nw = nonlinear_terms(s, dealias=dealias)
        n = transform_tendency(nu, nw)
        du_A = du_A - n.u_A
        dOmega = dOmega - n.omega_Omega
        dd = dd - n.omega_d
        dmean = dmean - n.omega_mean
    return TransformedTendency(du_A, dOmega, dd, np.asarray(dmean))


def energy(s: State) -> float:
    """``½(‖u‖²_{L²} + ‖ω‖²_{L²})``."""
    return 0.5 * (s.u.norm_l2() ** 2 + s.omega.norm_l2() ** 2)
