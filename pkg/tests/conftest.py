import sys
from pathlib import Path

import numpy as np
import pytest

import qjump as qj

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def two_band():
    return qj.build_two_band(1.0, 1.0)


@pytest.fixture
def spin_bath():
    return qj.build_spin_bath()


@pytest.fixture
def excited_lower():
    """|e> entirely in the lower-band component."""
    return qj.TrajectoryState(0.0, np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex))


@pytest.fixture
def spin_bath_initial():
    """Each spin-bath component starts as |e> with weight 1/3."""
    amp = 1.0 / np.sqrt(3.0)
    return qj.TrajectoryState(0.0, np.array([[amp, 0], [amp, 0], [amp, 0]], dtype=complex))
