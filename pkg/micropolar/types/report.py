from typing import Dict, List, TypedDict, Union

from .base import Measured


__all__ = ('CheckPayload', 'EnvPayload', 'ReportPayload', 'BoundScanPayload')


class CheckPayload(TypedDict):
    anchor: str
    name: str
    measured: Measured
    tolerance: Union[float, str, None]
    verdict: str


EnvPayload = Dict[str, Union[int, float, str, List[int], List[float]]]


class ReportPayload(TypedDict):
    suite: str
    checks: List[CheckPayload]
    env: EnvPayload


class BoundScanPayload(TypedDict):
    alpha: List[int]
    rho: List[float]
    t: List[float]
    measured_sup: float
    ceiling: float
    verdict: str
    diagnostics: List[str]
