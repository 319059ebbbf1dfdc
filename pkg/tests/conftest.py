import math

import numpy as np
import pytest

from config.settings import settings
from core.hardy import BoundaryGrid
from core.moebius import DiscAutomorphism, elliptic_of_order
from core.operators import WeightedCompositionOp1D, calibrate_alpha


@pytest.fixture(autouse=True)
def isolated_ledger(tmp_path, monkeypatch):
    """Keep CLI runs from writing to the real ledger."""
    monkeypatch.setattr(settings, "db_path", str(tmp_path / "runs.db"))
    monkeypatch.setattr(settings, "ledger_enabled", False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def boundary32():
    return BoundaryGrid(32)


@pytest.fixture
def order3_op():
    """Calibrated operator of order three on H^4."""
    tau = elliptic_of_order(3, 0.4)
    return WeightedCompositionOp1D(calibrate_alpha(tau, 3, 4.0), tau, 4.0)


@pytest.fixture
def half_turn():
    return DiscAutomorphism.rotation(math.pi)

