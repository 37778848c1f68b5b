import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def pauli_operator(vector) -> np.ndarray:
    """Half of (I + v.sigma): a density matrix for states, a projector for unit axes."""
    return 0.5 * (np.eye(2, dtype=complex) + sum(c * p for c, p in zip(vector, PAULI)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def r43():
    from sdirng.analysis.witness import r43_witness

    return r43_witness()


@pytest.fixture
def r43_protocol():
    from sdirng.analysis.protocol import r43_ideal

    return r43_ideal()


@pytest.fixture
def pauli():
    return pauli_operator
