"""The binary snapshot format and an asynchronous writer for it.

A snapshot is a little-endian header ``{magic "MPSF", version u32, n u32, L f64,
field count u32, reality u8}`` followed by the complex128 coefficients of every
component field in row-major ``k`` order. Bit ``c`` of the reality byte is set when
component ``c`` belongs to a real field; a state stores ``u¹ u² u³ ω¹ ω² ω³``.
"""

from __future__ import annotations

import logging
import struct
from concurrent.futures import Future, ThreadPoolExecutor
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple, Union

import numpy as np
from typing_extensions import Self

from .core import State
from .errors import SnapshotFormatError
from .grid import GridSpec, VectorField
from .utils import atomic_write

if TYPE_CHECKING:
    from os import PathLike

__all__ = (
    'MAGIC',
    'VERSION',
    'encode_fields',
    'decode_fields',
    'encode_state',
    'decode_state',
    'read_snapshot',
    'SnapshotWriter',
)

log = logging.getLogger(__name__)

MAGIC = b'MPSF'
VERSION = 1
HEADER = struct.Struct('<4sIIdIB')
_COMPLEX = np.dtype('<c16')


def encode_fields(fields: Sequence[VectorField], /) -> bytes:
    """Serialises vector fields that share one grid.

    Raises
    ------
    SnapshotFormatError
        More than eight components, or no field at all.
    """
    if not fields:
        raise SnapshotFormatError('a snapshot needs at least one field')
    grid = fields[0].grid
    for f in fields[1:]:
        f.check_grid(fields[0])
    count = 3 * len(fields)
    if count > 8:
        raise SnapshotFormatError(f'the reality byte holds eight components, got {count}')

    reality = 0
    for i, f in enumerate(fields):
        if f.is_real:
            reality |= 0b111 << (3 * i)

    header = HEADER.pack(MAGIC, VERSION, grid.n, grid.box_length, count, reality)
    body = b''.join(np.ascontiguousarray(f.modes, dtype=_COMPLEX).tobytes() for f in fields)
    return header + body


def decode_fields(data: bytes, /) -> Tuple[GridSpec, List[VectorField]]:
    """Parses bytes written by :func:`encode_fields`.

    Raises
    ------
    SnapshotFormatError
        The header is malformed or the payload has the wrong length.
    """
    if len(data) < HEADER.size:
        raise SnapshotFormatError(f'{len(data)} bytes is shorter than the {HEADER.size}-byte header')
    magic, version, n, box_length, count, reality = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f'bad magic {magic!r}')
    if version != VERSION:
        raise SnapshotFormatError(f'unsupported version {version}')
    if count == 0 or count % 3:
        raise SnapshotFormatError(f'field count {count} is not a positive multiple of three')

    try:
        grid = GridSpec(n, box_length)
    except ValueError as exc:
        raise SnapshotFormatError(f'invalid grid in header: {exc}') from exc

    expected = HEADER.size + count * n**3 * _COMPLEX.itemsize
    if len(data) != expected:
        raise SnapshotFormatError(f'expected {expected} bytes for n={n} and {count} fields, got {len(data)}')

    modes = np.frombuffer(data, dtype=_COMPLEX, offset=HEADER.size).reshape((count // 3, 3) + grid.shape)
    fields = []
    for i in range(count // 3):
        bits = (reality >> (3 * i)) & 0b111
        if bits not in (0, 0b111):
            raise SnapshotFormatError(f'components of field {i} disagree on reality')
        fields.append(VectorField(grid, modes[i].astype(np.complex128), real=bool(bits)))
    return grid, fields


def encode_state(s: State, /) -> bytes:
    return encode_fields((s.u, s.omega))


def decode_state(data: bytes, /, *, t: float = 0.0) -> State:
    """Rebuilds a :class:`State`; the format does not carry the time.

    Raises
    ------
    SnapshotFormatError
        The snapshot does not hold exactly two vector fields.
    """
    _, fields = decode_fields(data)
    if len(fields) != 2:
        raise SnapshotFormatError(f'a state snapshot holds two vector fields, got {len(fields)}')
    return State(fields[0], fields[1], t)


def read_snapshot(path: Union[str, PathLike], /) -> State:
    return decode_state(Path(path).read_bytes())


class SnapshotWriter:
    """Writes states to ``directory`` on a background thread, one file at a time.

    Files are named ``state-<index>.mpsf`` in submission order. Fields are immutable,
    so the submitted state cannot change before it is written.

    Parameters
    ----------
    directory: Union[str, PathLike]
        Target directory, created on demand.
    """

    def __init__(self, directory: Union[str, PathLike], /) -> None:
        self.directory: Path = Path(directory)
        self._executor: ThreadPoolExecutor = ThreadPoolExecutor(max_workers=1, thread_name_prefix='snapshot')
        self._pending: List[Future] = []
        self._count: int = 0

    def __call__(self, state: State, /) -> None:
        self.submit(state)

    def submit(self, state: State, /) -> Path:
        path = self.directory / f'state-{self._count:06d}.mpsf'
        self._count += 1
        self._pending.append(self._executor.submit(self._write, path, state))
        return path

    @staticmethod
    def _write(path: Path, state: State) -> Path:
        atomic_write(path, encode_state(state))
        log.debug(f'snapshot t={state.t:.6g} written to {path}')
        return path

    def close(self) -> List[Path]:
        """Waits for every pending write.

        Raises
        ------
        OutputError
            The first write that failed.
        """
        self._executor.shutdown(wait=True)
        error: Optional[BaseException] = None
        written = []
        for future in self._pending:
            exc = future.exception()
            if exc is None:
                written.append(future.result())
            elif error is None:
                error = exc
        self._pending.clear()
        if error is not None:
            raise error
        return written

    def __enter__(self) -> Self:
        return self

    def __exit__(self, *args: object) -> None:
        self.close()

    def __repr__(self) -> str:
        return f'<SnapshotWriter directory={str(self.directory)!r} submitted={self._count}>'
