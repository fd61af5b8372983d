import math

import numpy as np
import pytest

from micropolar import GridSpec, State, random_vector


@pytest.fixture
def grid16() -> GridSpec:
    return GridSpec(16, 2 * math.pi)


@pytest.fixture
def grid32() -> GridSpec:
    return GridSpec(32, 2 * math.pi)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)


@pytest.fixture
def state16(grid16: GridSpec, rng: np.random.Generator) -> State:
    u = random_vector(grid16, rng, solenoidal=True) * 1e-2
    omega = random_vector(grid16, rng) * 1e-2
    return State(u, omega)


@pytest.fixture
def threads(monkeypatch: pytest.MonkeyPatch) -> None:
    # keeps the FFT pools small on shared runners
    monkeypatch.setenv('MICROPOLAR_THREADS', '1')
