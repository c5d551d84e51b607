import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

# Independent dense oracle pieces: built here with plain kron chains so the
# tests never trust the package's own dense constructors.
I2 = np.eye(2, dtype=complex)
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
Y2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
SINGLE = {"I": I2, "X": X2, "Y": Y2, "Z": Z2}


def kron_chain(letters: str) -> np.ndarray:
    """Dense matrix for a Pauli text (qubit 0 leftmost = lowest index bit)."""
    mat = np.eye(1, dtype=complex)
    for ch in letters:  # later (higher) qubits become the more significant factor
        mat = np.kron(SINGLE[ch], mat)
    return mat


def dense_from_entries(entries, n_qubits: int, identity: float = 0.0) -> np.ndarray:
    dim = 2 ** n_qubits
    mat = identity * np.eye(dim, dtype=complex)
    for coeff, text in entries:
        mat = mat + coeff * kron_chain(text)
    return mat


def random_statevector(n_qubits: int, rng) -> np.ndarray:
    v = rng.normal(size=2 ** n_qubits) + 1j * rng.normal(size=2 ** n_qubits)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
