from __future__ import annotations

from abc import ABC, abstractmethod
from typing import (
    TYPE_CHECKING,
    Any,
    Literal,
    Optional,
    Tuple,
    TypeVar,
    Union,
    overload,
)

import numpy as np

from .errors import GridMismatch, RealityViolation

if TYPE_CHECKING:
    from .grid import GridSpec


F = TypeVar('F', bound='SpectralField')

__all__ = ('SpectralField',)


class SpectralField(ABC):
    """The base class that every field on a periodic spectral grid inherits from.

    Coefficients are immutable once wrapped: the array is marked read-only, so
    fields can be shared between threads and handed to background writers.
    """

    __slots__ = ('_grid', '_modes', '_real')

    def __init__(
        self, grid: GridSpec, modes: np.ndarray, /, *, real: bool = False
    ) -> None:
        array = np.array(modes, dtype=np.complex128, copy=True)
        self._store(grid, array, real)

    @classmethod
    def _wrap(cls: type[F], grid: GridSpec, modes: np.ndarray, real: bool, /) -> F:
        # takes ownership of a freshly computed array, no copy
        self = cls.__new__(cls)
        self._store(grid, np.asarray(modes, dtype=np.complex128), real)
        return self

    def _store(self, grid: GridSpec, modes: np.ndarray, real: bool, /) -> None:
        expected = self._component_shape() + grid.shape
        if modes.shape != expected:
            raise GridMismatch(
                f'{type(self).__name__} on n={grid.n} expects shape {expected}, got {modes.shape}'
            )
        modes.setflags(write=False)
        self._grid: GridSpec = grid
        self._modes: np.ndarray = modes
        self._real: bool = bool(real)

    @classmethod
    @abstractmethod
    def _component_shape(cls) -> Tuple[int, ...]:
        raise NotImplementedError

    @classmethod
    def zeros(cls: type[F], grid: GridSpec, /, *, real: bool = True) -> F:
        """Creates the zero field on ``grid``."""
        return cls._wrap(grid, np.zeros(cls._component_shape() + grid.shape, np.complex128), real)

    @property
    def grid(self, /) -> GridSpec:
        """:class:`GridSpec`: The grid this field lives on."""
        return self._grid

    @property
    def modes(self, /) -> np.ndarray:
        """:class:`numpy.ndarray`: The read-only Fourier coefficients, component axes first."""
        return self._modes

    @property
    def is_real(self, /) -> bool:
        """bool: Whether the field is flagged as real-valued."""
        return self._real

    def with_modes(self: F, modes: np.ndarray, /, *, real: Optional[bool] = None) -> F:
        """Returns a field of the same kind on the same grid with a copy of ``modes``."""
        array = np.array(modes, dtype=np.complex128, copy=True)
        return type(self)._wrap(self._grid, array, self._real if real is None else real)

    def check_grid(self, other: SpectralField, /) -> None:
        if self._grid != other._grid:
            raise GridMismatch(f'grid mismatch: {self._grid!r} vs {other._grid!r}')

    def masked(self: F, /) -> F:
        """Applies the dealias mask."""
        return self.with_modes(self._modes * self._grid.dealias_mask)

    def without_mean(self: F, /) -> F:
        """Removes the zero mode."""
        modes = self._modes.copy()
        modes[..., 0, 0, 0] = 0
        return self.with_modes(modes)

    def norm_l2(self, /) -> float:
        """Spatial L² norm of the field (Euclidean over components), by Parseval."""
        return float(np.sqrt(self._grid.volume * np.sum(np.abs(self._modes) ** 2)))

    def mirrored_modes(self, /) -> np.ndarray:
        """Coefficients re-indexed from ``k`` to ``-k``."""
        axes = (-3, -2, -1)
        return np.roll(np.flip(self._modes, axis=axes), 1, axis=axes)

    def reality_defect(self, /) -> float:
        """Largest relative violation of conjugate symmetry."""
        scale = np.max(np.abs(self._modes), initial=0.0)
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(self.mirrored_modes() - np.conj(self._modes))) / scale)

    def check_reality(self, /, *, tolerance: float = 1e-12) -> None:
        """Raises :exc:`RealityViolation` when a real-flagged field is not conjugate-symmetric."""
        if self._real and (defect := self.reality_defect()) > tolerance:
            raise RealityViolation(f'reality defect {defect:.3e} exceeds {tolerance:.0e}')

    def _binary(self: F, other: Any, op: str, /) -> F:
        if isinstance(other, SpectralField):
            if type(other) is not type(self):
                return NotImplemented
            self.check_grid(other)
            modes = getattr(self._modes, op)(other._modes)
            return self.with_modes(modes, real=self._real and other._real)
        return NotImplemented

    def __add__(self: F, other: F, /) -> F:
        return self._binary(other, '__add__')

    def __sub__(self: F, other: F, /) -> F:
        return self._binary(other, '__sub__')

    def __neg__(self: F, /) -> F:
        return self.with_modes(-self._modes)

    def __mul__(self: F, other: Union[int, float, complex], /) -> F:
        if isinstance(other, SpectralField):
            return NotImplemented
        real = self._real and np.isrealobj(other)
        return self.with_modes(self._modes * other, real=real)

    __rmul__ = __mul__

    __hash__ = None  # type: ignore

    @overload
    def __eq__(self: F, other: F, /) -> bool:  # type: ignore
        ...

    @overload
    def __eq__(self, other: Any, /) -> Literal[False]:
        ...

    def __eq__(self, other: Any, /) -> bool:
        return (
            isinstance(other, self.__class__)
            and other._grid == self._grid
            and np.array_equal(other._modes, self._modes)
        )

    def __ne__(self, other: Any, /) -> bool:
        return not self.__eq__(other)

    def __repr__(self) -> str:
        return f'<{type(self).__name__} n={self._grid.n} L={self._grid.box_length:g} real={self._real}>'
