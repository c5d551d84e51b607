"""Compilation of non-unitary Trotter steps into unitaries.

One step replaces the normalized action of e^{h/n} on the current state with
a unitary e^{-iA/n}, where the Hermitian generator A lives on a small qubit
domain and its Pauli coefficients solve the least-squares system
(S + S^dagger) a = -b built from exact inner products (optionally perturbed
by simulated swap-test shot noise).
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import exact, statevec
from .errors import (CapacityError, HermiticityError, NumericalError,
                     UnsupportedLocalityError)
from .pauli import PauliString, PauliSum, pauli_mul
from .statevec import StateVector

#: largest allowed generator domain (4^6 - 1 basis strings)
DOMAIN_CAP = 6

_LETTERS = "IXYZ"


@dataclass(frozen=True)
class QiteOptions:
    """Knobs for the unitary compilation of imaginary-time steps."""

    n_steps: int = 20
    domain_size: int | None = None  # None: use each term's own support
    regularization: float = 1e-8
    shot_noise: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.domain_size is not None and not 1 <= self.domain_size <= DOMAIN_CAP:
            raise ValueError(f"domain_size must be in [1, {DOMAIN_CAP}]")
        if self.regularization < 0:
            raise ValueError("regularization must be >= 0")
        if self.shot_noise is not None and self.shot_noise < 1:
            raise ValueError("shot_noise must be >= 1 when set")


@dataclass(frozen=True)
class QiteStepRecord:
    """Solution summary for one compiled step.

    residual is the solved real system's leftover; residual_imag is the
    imaginary component of the right-hand side that a real coefficient
    vector cannot address (it tracks the normalization direction).
    """

    a_coeffs: np.ndarray
    c_norm: float
    residual: float
    fidelity_vs_exact: float | None
    c_first_order: float
    domain: tuple[int, ...]
    residual_imag: float = 0.0


@dataclass(frozen=True)
class QiteEvolution:
    state: StateVector
    records: list[QiteStepRecord]
    fidelity_vs_exact: float | None


def trotter_terms(h: PauliSum, max_locality: int = 2) -> list[PauliSum]:
    """Split a Hermitian sum into its single-string pieces, declaration order.

    The identity component only rescales states and is omitted (the sum of the
    returned pieces reproduces the traceless part of H).  Terms wider than
    max_locality are refused.
    """
    if not h.is_hermitian:
        raise HermiticityError("trotter_terms requires a Hermitian sum")
    cap = min(max_locality, DOMAIN_CAP)
    out = []
    for coeff, term in h.terms:
        if term.weight() > cap:
            raise UnsupportedLocalityError(
                f"term {term} acts on {term.weight()} qubits (cap {cap})")
        out.append(PauliSum(h.n_qubits, [(coeff, term)], drop_tol=0.0))
    return out


def _expand_domain(support: tuple[int, ...], size: int | None,
                   n_qubits: int) -> tuple[int, ...]:
    """Grow the support to `size` qubits: interior gaps first, then neighbors."""
    domain = sorted(support)
    if size is None or size <= len(domain):
        return tuple(domain)
    want = min(size, n_qubits)
    inside = [q for q in range(domain[0], domain[-1]) if q not in domain]
    while len(domain) < want and inside:
        domain.append(inside.pop(0))
    lo, hi = min(domain), max(domain)
    while len(domain) < want:
        if hi + 1 < n_qubits:
            hi += 1
            domain.append(hi)
        elif lo > 0:
            lo -= 1
            domain.append(lo)
        else:
            break
    return tuple(sorted(domain))


def _domain_strings(domain: tuple[int, ...], n_qubits: int) -> list[PauliString]:
    """All 4^d Pauli strings supported on the domain, identity first."""
    strings = []
    for codes in itertools.product(range(4), repeat=len(domain)):
        letters = {q: _LETTERS[c] for q, c in zip(domain, codes) if c}
        strings.append(PauliString.from_letters(n_qubits, letters))
    return strings


def _noisy(value: complex, shots: int, rng) -> complex:
    """Binomial swap-test emulation of a bounded expectation value."""
    out = []
    for part in (value.real, value.imag):
        p = min(max((1.0 + part) / 2.0, 0.0), 1.0)
        out.append(2.0 * rng.binomial(shots, p) / shots - 1.0)
    return complex(out[0], out[1])


def build_linear_system(psi0: StateVector, h_term: PauliSum, inv_n: float,
                        domain: tuple[int, ...], shot_noise: int | None = None,
                        rng=None) -> tuple[np.ndarray, np.ndarray, float]:
    """S, b and the exact squared step norm c for one Trotter term.

    S[i, j] = <psi0| sigma_i sigma_j |psi0> over every Pauli string on the
    domain (identity included, index 0); b[i] = -i c^{-1/2} <psi0| sigma_i h |psi0>;
    c = ||e^{h * inv_n} psi0||^2 computed exactly.
    """
    if len(domain) > DOMAIN_CAP:
        raise CapacityError(f"domain {domain} exceeds cap {DOMAIN_CAP}")
    n = psi0.n_qubits
    strings = _domain_strings(domain, n)
    dim = len(strings)
    index = {(s.x_mask, s.z_mask): idx for idx, s in enumerate(strings)}
    # expectation of every domain string, reused for all S and b entries
    mu = np.empty(dim, dtype=np.complex128)
    for idx, s in enumerate(strings):
        mu[idx] = statevec.inner(psi0, statevec.apply_pauli(s, psi0))
    if len(h_term.terms) > 1:
        raise ValueError("build_linear_system expects a single-term Hamiltonian")
    if h_term.terms:
        w, p_h = h_term.terms[0]
    else:
        w, p_h = 0.0, PauliString.identity(n)
    if p_h.support() | _mask(domain) != _mask(domain):
        raise ValueError("domain does not cover the support of the term")

    # exact step norm; the first-order estimate is reported alongside
    evolved = statevec.apply_exp_real(float(w) * inv_n, p_h, psi0)
    c = float(evolved.norm() ** 2)

    rng = np.random.default_rng(rng) if not hasattr(rng, "binomial") else rng
    s_mat = np.empty((dim, dim), dtype=np.complex128)
    for i, si in enumerate(strings):
        for j, sj in enumerate(strings):
            phase, prod = pauli_mul(si, sj)
            val = phase * mu[index[(prod.x_mask, prod.z_mask)]]
            s_mat[i, j] = _noisy(val, shot_noise, rng) if shot_noise else val
    b = np.empty(dim, dtype=np.complex128)
    c_root = 1.0 / math.sqrt(c)
    for i, si in enumerate(strings):
        phase, prod = pauli_mul(si, p_h)
        val = phase * mu[index[(prod.x_mask, prod.z_mask)]]
        if shot_noise:
            val = _noisy(val, shot_noise, rng)
        b[i] = -1j * c_root * float(w) * val
    return s_mat, b, c


def _mask(qubits) -> int:
    out = 0
    for q in qubits:
        out |= 1 << q
    return out


def c_first_order(psi0: StateVector, h_term: PauliSum, inv_n: float) -> float:
    """First-order normalization estimate 1 - 2 inv_n <psi0|h|psi0>."""
    return 1.0 - 2.0 * inv_n * statevec.expectation(h_term, psi0)


def _local_dense(strings, coeffs, domain) -> np.ndarray:
    """Dense matrix on the domain qubits of sum_i coeffs[i] * strings[i]."""
    pos = {q: r for r, q in enumerate(domain)}
    dim = 1 << len(domain)
    out = np.zeros((dim, dim), dtype=np.complex128)
    for coeff, s in zip(coeffs, strings):
        if coeff == 0.0:
            continue
        local = PauliString.from_letters(
            len(domain), {pos[q]: s.letter(q) for q in s.support_qubits()})
        out += coeff * exact.pauli_matrix(local)
    return out


def qite_step(psi0: StateVector, h_term: PauliSum, opts: QiteOptions,
              rng=None) -> tuple[StateVector, QiteStepRecord]:
    """Apply the unitary surrogate of one normalized e^{h/n} step."""
    n = psi0.n_qubits
    if h_term.n_qubits != n:
        raise CapacityError("term and state sizes differ")
    if not h_term.terms or h_term.terms[0][0] == 0.0:
        record = QiteStepRecord(np.zeros(0), 1.0, 0.0, 1.0, 1.0, ())
        return psi0, record
    w, p_h = h_term.terms[0]
    support = p_h.support_qubits()
    if len(support) > (opts.domain_size or DOMAIN_CAP):
        raise UnsupportedLocalityError(
            f"term support {support} exceeds the configured domain")
    domain = _expand_domain(support, opts.domain_size, n)
    inv_n = 1.0 / opts.n_steps
    if rng is None:
        rng = np.random.default_rng(opts.rng_seed)
    s_mat, b, c = build_linear_system(psi0, h_term, inv_n, domain,
                                      shot_noise=opts.shot_noise, rng=rng)
    strings = _domain_strings(domain, n)
    # the identity direction only contributes a global phase; drop it
    s_red = s_mat[1:, 1:]
    b_red = b[1:]
    sym = s_red + s_red.conj().T
    m_real = sym.real
    # real linear-response right-hand side: the Gram matrix is Hermitian so
    # S + S^dagger doubles it, and the matching RHS carries the same factor
    rhs = -2.0 * b_red.real
    lam = opts.regularization * (np.trace(m_real) / m_real.shape[0])
    lam = max(float(lam), 0.0)
    stacked = np.vstack([m_real, math.sqrt(lam) * np.eye(m_real.shape[0])]) \
        if lam > 0 else m_real
    target = np.concatenate([rhs, np.zeros(m_real.shape[0])]) if lam > 0 else rhs
    a, *_ = np.linalg.lstsq(stacked, target, rcond=None)
    if not np.all(np.isfinite(a)):
        raise NumericalError("non-finite generator coefficients")
    residual = float(np.linalg.norm(m_real @ a - rhs))
    residual_imag = float(np.linalg.norm(sym.imag @ a + 2.0 * b_red.imag))
    gen = _local_dense(strings[1:], a, domain)
    vals, vecs = np.linalg.eigh(gen)
    unitary = (vecs * np.exp(-1j * inv_n * vals)) @ vecs.conj().T
    evolved = statevec.apply_dense(unitary, domain, psi0)
    psi1 = statevec.normalize(evolved)
    exact_state = statevec.normalize(
        statevec.apply_exp_real(float(w) * inv_n, p_h, psi0))
    record = QiteStepRecord(
        a_coeffs=a,
        c_norm=c,
        residual=residual,
        fidelity_vs_exact=statevec.fidelity(psi1, exact_state),
        c_first_order=c_first_order(psi0, h_term, inv_n),
        domain=domain,
        residual_imag=residual_imag,
    )
    return psi1, record


def qite_evolve(psi0: StateVector, h: PauliSum, tau_total: float,
                opts: QiteOptions) -> QiteEvolution:
    """n_steps sweeps of per-term unitary steps approximating e^{tau H}.

    The reported fidelity compares against the exact normalized evolution
    when the register fits the dense bound (None otherwise).
    """
    if tau_total < 0:
        raise ValueError("tau_total must be >= 0")
    if tau_total == 0.0:
        return QiteEvolution(psi0, [], 1.0)
    cap = opts.domain_size if opts.domain_size is not None else 2
    terms = trotter_terms(h.scaled(tau_total), max_locality=cap)
    rng = np.random.default_rng(opts.rng_seed)
    state = psi0
    records: list[QiteStepRecord] = []
    for _sweep in range(opts.n_steps):
        for term in terms:
            state, record = qite_step(state, term, opts, rng=rng)
            records.append(record)
    fid = None
    if h.n_qubits <= exact.DENSE_QUBIT_LIMIT:
        mat = exact.matrix_exp(h, scale=tau_total, shift_max=True)
        want = mat @ psi0.amplitudes
        want = want / np.linalg.norm(want)
        fid = statevec.fidelity(state, statevec.from_amplitudes(want))
    return QiteEvolution(state, records, fid)
