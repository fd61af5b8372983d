from typing import List, TypedDict, Union

from .base import Exponent, MultiIndex


__all__ = (
    'GridTable',
    'ParamsTable',
    'IntegratorTable',
    'DataTable',
    'ProbeTable',
    'OutputsTable',
    'SamplesTable',
    'VerificationTable',
    'ConfigDocument',
)


class GridTable(TypedDict, total=False):
    n: int
    box_length: float
    dealias_fraction: float


class ParamsTable(TypedDict, total=False):
    chi: float
    nu: float
    kappa: float
    mu: float


class IntegratorTable(TypedDict, total=False):
    scheme: str
    dt: float
    t_end: float
    sample_stride: int
    dealias: bool
    nonlinear: bool
    continuation_window: float


class DataTable(TypedDict, total=False):
    kind: str
    amplitude: float
    normalize_to: float
    epsilon: float
    shell: int
    seed: int


class ProbeTable(TypedDict, total=False):
    field: str
    s: float
    p: Exponent
    q: Exponent
    alpha: MultiIndex


class OutputsTable(TypedDict, total=False):
    csv: str
    json: str
    snapshot_dir: str
    snapshot_stride: int


class SamplesTable(TypedDict, total=False):
    bony: int
    bernstein: int
    interpolation: int
    besov_l2: int
    products: int
    paraproducts: int


class VerificationTable(TypedDict, total=False):
    samples: Union[int, SamplesTable]
    green_n: int
    shells: List[int]
    exponents: List[Exponent]
    ledger_exponents: List[Exponent]
    decay_window: List[float]
    boundedness_window: List[float]
    oscillation_exponents: List[Exponent]
    amplification_ceiling: float


class ConfigDocument(TypedDict, total=False):
    grid: GridTable
    params: ParamsTable
    integrator: IntegratorTable
    data: DataTable
    probes: List[ProbeTable]
    outputs: OutputsTable
    verification: VerificationTable
