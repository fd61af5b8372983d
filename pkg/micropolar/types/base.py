from typing import List, Protocol, Union, runtime_checkable

from typing_extensions import TypeAlias

__all__ = ('Exponent', 'MultiIndex', 'Measured', 'SupportsPayload')


# TOML has no infinity literal that survives every writer, so "inf" is accepted too.
Exponent: TypeAlias = Union[float, int, str]

MultiIndex: TypeAlias = List[int]

Measured: TypeAlias = Union[float, int, bool, str, None, List[float], dict]


@runtime_checkable
class SupportsPayload(Protocol):
    __slots__ = ()

    def to_payload(self) -> dict:
        ...
