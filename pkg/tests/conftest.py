import numpy as np
import pytest

from centred_qso.cf_engine import symmetric_grid
from centred_qso.streams import RandomStream


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv("QSO_SEED", raising=False)


@pytest.fixture
def stream():
    return RandomStream(20240917)


@pytest.fixture
def grid():
    # |s| <= 10 in steps of 0.05
    return symmetric_grid(0.05, 200)


@pytest.fixture
def small_grid():
    return np.arange(-20, 21) * 0.25
