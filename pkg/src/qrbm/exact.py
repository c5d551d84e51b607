"""Dense ground truth: eigendecomposition, Gibbs states, matrix exponentials
and the low-subspace self-energy operator.

Everything here is desk-scale by design: dense 2^n x 2^n objects capped at
DENSE_QUBIT_LIMIT qubits.  Matrix exponentials go through the Hermitian
eigendecomposition with max-eigenvalue shifting, so strongly amplifying
exponents never overflow.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (CapacityError, HermiticityError, NumericalError,
                     SelfEnergyPoleError, SpectrumPartitionError)
from .pauli import PauliString, PauliSum
from .statevec import StateVector

#: dense 2^n x 2^n feasibility bound
DENSE_QUBIT_LIMIT = 14

#: relative gap below which a ground space counts as degenerate
DEGENERACY_RTOL = 1e-8

#: relative distance to a pole below which the resolvent is refused
POLE_RTOL = 1e-8


@dataclass(frozen=True)
class SpectralReport:
    """Eigensystem summary: ascending eigenvalues, ground state, gap."""

    eigenvalues: np.ndarray
    ground_state: StateVector
    gap: float
    degeneracy_flag: bool
    eigenvectors: np.ndarray  # columns, ascending eigenvalue order

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def ground_projector(self) -> np.ndarray:
        """Projector onto the (possibly degenerate) ground subspace."""
        scale = max(abs(float(self.eigenvalues[0])),
                    abs(float(self.eigenvalues[-1])), 1e-300)
        mask = self.eigenvalues <= self.eigenvalues[0] + DEGENERACY_RTOL * scale
        vecs = self.eigenvectors[:, mask]
        return vecs @ vecs.conj().T


@dataclass(frozen=True)
class SelfEnergyReport:
    """Self-energy on the low subspace of a reference spectral split."""

    sigma: np.ndarray           # d_low x d_low, low eigenbasis of the split
    basis_low: np.ndarray       # 2^n x d_low column vectors of that basis
    low_eigenvalues: np.ndarray  # split-operator eigenvalues below the cutoff
    z: float
    lambda_c: float


def _check_dense_bound(n_qubits: int):
    if n_qubits > DENSE_QUBIT_LIMIT:
        raise CapacityError(
            f"{n_qubits} qubits exceeds the dense bound of {DENSE_QUBIT_LIMIT}")


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Dense matrix of a single Pauli string (column-sparse construction)."""
    _check_dense_bound(p.n_qubits)
    dim = 1 << p.n_qubits
    idx = np.arange(dim, dtype=np.uint64)
    rows = (idx ^ np.uint64(p.x_mask)).astype(np.int64)
    vals = np.ones(dim, dtype=np.complex128)
    if p.z_mask:
        parity = np.bitwise_count(idx & np.uint64(p.z_mask)) & np.uint64(1)
        vals *= 1.0 - 2.0 * parity.astype(np.float64)
    ny = (p.x_mask & p.z_mask).bit_count() % 4
    if ny:
        vals *= (1j) ** ny
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[rows, idx.astype(np.int64)] = vals
    return mat


def to_dense(h: PauliSum) -> np.ndarray:
    """Exact dense matrix of a Pauli sum."""
    _check_dense_bound(h.n_qubits)
    dim = 1 << h.n_qubits
    mat = np.zeros((dim, dim), dtype=np.complex128)
    if h.identity_coeff != 0.0:
        np.fill_diagonal(mat, h.identity_coeff)
    idx = np.arange(dim, dtype=np.uint64)
    cols = idx.astype(np.int64)
    for coeff, term in h.terms:
        rows = (idx ^ np.uint64(term.x_mask)).astype(np.int64)
        vals = np.full(dim, coeff, dtype=np.complex128)
        if term.z_mask:
            parity = np.bitwise_count(idx & np.uint64(term.z_mask)) & np.uint64(1)
            vals *= 1.0 - 2.0 * parity.astype(np.float64)
        ny = (term.x_mask & term.z_mask).bit_count() % 4
        if ny:
            vals *= (1j) ** ny
        mat[rows, cols] += vals
    return mat


def _dense_of(h) -> tuple[np.ndarray, int]:
    if isinstance(h, PauliSum):
        if not h.is_hermitian:
            raise HermiticityError("operation requires a Hermitian Pauli sum")
        return to_dense(h), h.n_qubits
    mat = np.asarray(h, dtype=np.complex128)
    n = int(math.log2(mat.shape[0]))
    _check_dense_bound(n)
    if np.linalg.norm(mat - mat.conj().T) > 1e-10 * max(np.linalg.norm(mat), 1e-300):
        raise HermiticityError("dense operator is not Hermitian")
    return mat, n


def eigh(h) -> SpectralReport:
    """Full eigensystem of a Hermitian Pauli sum (or dense matrix)."""
    mat, n = _dense_of(h)
    vals, vecs = np.linalg.eigh(mat)
    norm = max(abs(float(vals[0])), abs(float(vals[-1])), 1e-300)
    residual = np.linalg.norm(mat @ vecs - vecs * vals, axis=0).max()
    if residual > 1e-9 * max(norm, 1.0):
        raise NumericalError(f"eigenpair residual {residual!r} too large")
    gap = float(vals[1] - vals[0]) if vals.shape[0] > 1 else 0.0
    ground = StateVector(n, vecs[:, 0], normalized=True)
    return SpectralReport(
        eigenvalues=vals,
        ground_state=ground,
        gap=gap,
        degeneracy_flag=bool(gap < DEGENERACY_RTOL * norm),
        eigenvectors=vecs,
    )


def matrix_exp(h, scale: float = 1.0, shift_max: bool = False):
    """Dense e^{scale*H} for Hermitian H via eigendecomposition.

    With shift_max the result is e^{scale*(H - lambda_max_term I)}, i.e. the
    largest exponent is pinned to 1; use it when only the direction matters.
    """
    mat, _ = _dense_of(h)
    vals, vecs = np.linalg.eigh(mat)
    expo = scale * vals
    if shift_max:
        expo = expo - np.max(expo)
    return (vecs * np.exp(expo)) @ vecs.conj().T


def gibbs_state(h: PauliSum, beta: float) -> np.ndarray:
    """Thermal density matrix e^{-beta H} / Z."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    mat, _ = _dense_of(h)
    vals, vecs = np.linalg.eigh(mat)
    w = np.exp(-beta * (vals - vals.min()))
    rho = (vecs * (w / w.sum())) @ vecs.conj().T
    return rho


def gibbs_purification(h: PauliSum, beta: float) -> StateVector:
    """Pure state on 2N qubits whose first-register reduction is the Gibbs state.

    Register 1 holds qubits 0..N-1 (low index bits), register 2 holds N..2N-1;
    the state is (e^{-beta H/2} (x) I) applied to sum_x |x>|x>, normalized.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    n = h.n_qubits
    mat, _ = _dense_of(h)
    vals, vecs = np.linalg.eigh(mat)
    w = np.exp(-0.5 * beta * (vals - vals.min()))
    half = (vecs * w) @ vecs.conj().T
    # amplitude at index x + 2^n y equals half[x, y] (column y = ancilla label)
    amps = (half / np.linalg.norm(half)).reshape(-1, order="F")
    return StateVector(2 * n, amps, normalized=True)


def self_energy(h, z: float, lambda_c: float, split=None) -> SelfEnergyReport:
    """Low-subspace self-energy z*I - inv((zI - H)^{-1} restricted).

    The low/high partition comes from the eigendecomposition of `split`
    (default: H itself, which reproduces H restricted to its own low
    eigenspace exactly).  Passing the unperturbed part of H as `split`
    gives the perturbation-theory self-energy of the full operator.
    """
    mat, n = _dense_of(h)
    split_mat, split_n = _dense_of(split if split is not None else h)
    if split_n != n:
        raise SpectrumPartitionError("split operator size mismatch")
    vals, vecs = np.linalg.eigh(split_mat)
    low = vals < lambda_c
    if not low.any() or low.all():
        raise SpectrumPartitionError(
            f"cutoff {lambda_c!r} leaves an empty subspace")
    h_vals = np.linalg.eigvalsh(mat)
    norm = max(abs(float(h_vals[0])), abs(float(h_vals[-1])), 1e-300)
    if np.min(np.abs(h_vals - z)) <= POLE_RTOL * norm:
        raise SelfEnergyPoleError(
            f"z = {z!r} within pole tolerance of the spectrum")
    dim = mat.shape[0]
    resolvent = np.linalg.inv(z * np.eye(dim) - mat)
    basis_low = vecs[:, low]
    g_low = basis_low.conj().T @ resolvent @ basis_low
    sigma = z * np.eye(g_low.shape[0]) - np.linalg.inv(g_low)
    return SelfEnergyReport(
        sigma=sigma,
        basis_low=basis_low,
        low_eigenvalues=vals[low],
        z=z,
        lambda_c=lambda_c,
    )


def project_low(operator, report: SelfEnergyReport) -> np.ndarray:
    """Matrix of an operator in the report's low-subspace basis."""
    mat = to_dense(operator) if isinstance(operator, PauliSum) else np.asarray(operator)
    return report.basis_low.conj().T @ mat @ report.basis_low
