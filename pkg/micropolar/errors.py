from __future__ import annotations

from typing import TYPE_CHECKING, Any, Optional, Sequence

if TYPE_CHECKING:
    import numpy as np

__all__ = (
    'MicropolarException',
    'GridMismatch',
    'InvalidGrid',
    'UnsupportedOrder',
    'InvalidParameters',
    'RealityViolation',
    'DivergenceViolation',
    'EmptyShellRange',
    'NonMonotoneTimes',
    'InsufficientSamples',
    'InconsistentState',
    'NumericError',
    'BlowUp',
    'ConfigurationError',
    'ConfigParseError',
    'SnapshotFormatError',
    'OutputError',
)


class MicropolarException(Exception):
    """Base class for all micropolar-originated exceptions.

    Catching it covers every failure the library signals itself; numerical warnings
    from numpy and scipy pass through unchanged.
    """

    pass


class GridMismatch(MicropolarException, ValueError):
    """Fields live on different grids, or an array does not fit the grid it was given."""

    pass


class InvalidGrid(MicropolarException, ValueError):
    """The grid parameters are not admissible."""

    pass


class UnsupportedOrder(MicropolarException, ValueError):
    """A derivative order or a Lambda exponent lies outside the supported range."""

    pass


class InvalidParameters(MicropolarException, ValueError):
    """The viscosity coefficients violate their sign constraints."""

    pass


class RealityViolation(MicropolarException):
    """A field flagged as real is not conjugate-symmetric."""

    pass


class DivergenceViolation(MicropolarException, ValueError):
    """
    The velocity of a state is not divergence-free.

    Attributes
    ----------
    residual: float
        The measured divergence residual.
    """

    def __init__(self, residual: float, tolerance: float) -> None:
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f'divergence residual {residual:.3e} exceeds tolerance {tolerance:.1e}'
        )


class EmptyShellRange(MicropolarException):
    """The grid resolves no complete dyadic shell."""

    pass


class NonMonotoneTimes(MicropolarException, ValueError):
    """Sample times of a series are not strictly increasing."""

    pass


class InsufficientSamples(MicropolarException, ValueError):
    """A time integral was requested over fewer than two samples."""

    pass


class InconsistentState(MicropolarException, ValueError):
    """A transformed state does not match the primitive state it was paired with."""

    pass


class NumericError(MicropolarException):
    """
    A matrix exponential failed to produce a finite result.

    Attributes
    ----------
    xi: Optional[:class:`numpy.ndarray`]
        The offending wavevector.
    t: Optional[float]
        The offending time.
    """

    def __init__(
        self, message: str, *, xi: Optional[np.ndarray] = None, t: Optional[float] = None
    ) -> None:
        self.xi = xi
        self.t = t
        super().__init__(message)


class BlowUp(MicropolarException):
    """
    A non-finite coefficient appeared during time stepping.

    Attributes
    ----------
    t: float
        The time at which the blow-up was detected.
    shell: Optional[int]
        The dyadic shell holding the first non-finite coefficient.
    partial: Any
        The diagnostics gathered up to the failure.
    """

    def __init__(self, t: float, shell: Optional[int], partial: Any = None) -> None:
        self.t = t
        self.shell = shell
        self.partial = partial
        super().__init__(f'non-finite coefficients at t={t:.6g} (shell {shell})')


class ConfigurationError(MicropolarException, ValueError):
    """
    A configuration violates one or more invariants.

    Attributes
    ----------
    violations: List[str]
        Every violated invariant, in the order they were found.
    """

    def __init__(self, violations: Sequence[str]) -> None:
        self.violations = list(violations)
        super().__init__('; '.join(self.violations))


class ConfigParseError(MicropolarException, ValueError):
    """
    The configuration document is not well-formed.

    Attributes
    ----------
    line: Optional[int]
        1-based line of the error, when known.
    column: Optional[int]
        1-based column of the error, when known.
    """

    def __init__(
        self, message: str, *, line: Optional[int] = None, column: Optional[int] = None
    ) -> None:
        self.line = line
        self.column = column
        super().__init__(message)


class SnapshotFormatError(MicropolarException, ValueError):
    """The bytes do not form a valid snapshot."""

    pass


class OutputError(MicropolarException, OSError):
    """
    Writing an artifact failed.

    Attributes
    ----------
    path: str
        The file that could not be written.
    """

    def __init__(self, path: Any, reason: BaseException) -> None:
        self.path = str(path)
        super().__init__(f'could not write {self.path}: {reason}')
