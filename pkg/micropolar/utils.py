from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING, Any, Sequence, Tuple, Union

import numpy as np

from .errors import OutputError
from .types.base import SupportsPayload

if TYPE_CHECKING:
    from os import PathLike

    from .types import Exponent

__all__ = (
    'to_json',
    'from_json',
    'atomic_write',
    'parse_exponent',
    'format_exponent',
    'fit_line',
    'loglog_slope',
)

log = logging.getLogger(__name__)


def _plain(obj: Any) -> Any:
    # numpy scalars and arrays become Python values; non-finite floats become strings
    if isinstance(obj, SupportsPayload):
        return _plain(obj.to_payload())
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if math.isfinite(value):
            return value
        return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')
    return obj


def to_json(obj: Any) -> str:
    return json.dumps(_plain(obj), ensure_ascii=True, sort_keys=True, indent=2)


def from_json(json_str: str) -> Any:
    if not json_str:
        return None
    return json.loads(json_str)


def atomic_write(path: Union[str, PathLike], data: Union[bytes, str], /) -> Path:
    """Writes ``data`` to ``path`` through a temporary file and a rename.

    Readers never observe a partially written file.

    Parameters
    ----------
    path: Union[str, PathLike]
        The destination file. Missing parent directories are created.
    data: Union[bytes, str]
        The content. Strings are encoded as UTF-8.

    Raises
    ------
    OutputError
        The file could not be written.

    Returns
    -------
    :class:`pathlib.Path`
        The destination path.
    """
    target = Path(path)
    payload = data.encode('utf-8') if isinstance(data, str) else data
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f'.{target.name}.', dir=target.parent)
        try:
            with os.fdopen(fd, 'wb') as f:
                f.write(payload)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputError(target, exc) from exc

    log.debug(f'wrote {len(payload)} bytes to {target}')
    return target


def parse_exponent(value: Exponent, /) -> float:
    """Parses a Lebesgue or summation exponent, accepting ``"inf"`` for infinity.

    Raises
    ------
    ValueError
        The value is not a number in [1, inf].
    """
    if isinstance(value, str):
        text = value.strip().lower()
        exponent = math.inf if text in ('inf', 'infinity', '∞') else float(text)
    else:
        exponent = float(value)

    if not exponent >= 1:
        raise ValueError(f'exponent must lie in [1, inf], got {value!r}')
    return exponent


def format_exponent(value: float, /) -> str:
    if math.isinf(value):
        return 'inf'
    return f'{value:g}'


def fit_line(x: Sequence[float], y: Sequence[float], /) -> Tuple[float, float]:
    """Least-squares line through ``(x, y)``.

    Returns
    -------
    Tuple[float, float]
        ``(slope, intercept)``.
    """
    slope, intercept = np.polyfit(np.asarray(x, dtype=float), np.asarray(y, dtype=float), 1)
    return float(slope), float(intercept)


def loglog_slope(x: Sequence[float], y: Sequence[float], /) -> float:
    """Slope of ``log y`` against ``log x`` by least squares."""
    return fit_line(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)))[0]
