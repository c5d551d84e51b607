"""Dense complex statevector with Pauli-generated unitary and non-unitary actions.

Basis convention: qubit q is bit q of the amplitude index, so the basis label
string writes qubit 0 leftmost (matching the Pauli text convention).  Values
are immutable once returned; non-unitary actions never renormalize silently.
"""

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (CapacityError, DimensionMismatchError, HermiticityError,
                     NumericalError, PostselectionImpossibleError)
from .pauli import PauliString, PauliSum

#: hard cap for dense amplitude arrays (~4M complex values)
MAX_QUBITS = 22

NORM_ATOL = 1e-12
_POSTSELECT_FLOOR = 1e-14


@dataclass(frozen=True)
class StateVector:
    """2^n complex amplitudes plus an explicit normalization flag."""

    n_qubits: int
    amplitudes: np.ndarray
    normalized: bool

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("negative qubit count")
        if self.n_qubits > MAX_QUBITS:
            raise CapacityError(
                f"{self.n_qubits} qubits exceeds the dense cap of {MAX_QUBITS}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_qubits,):
            raise DimensionMismatchError(
                f"amplitude array of shape {amps.shape} for {self.n_qubits} qubits")
        amps = np.ascontiguousarray(amps)
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized:
            total = float(np.sum(np.abs(amps) ** 2))
            if abs(total - 1.0) > 1e-10:
                raise NumericalError(
                    f"state flagged normalized but <psi|psi> = {total!r}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def basis_labels(self) -> list[str]:
        return [basis_label(i, self.n_qubits) for i in range(1 << self.n_qubits)]


def basis_label(index: int, n_qubits: int) -> str:
    """Basis string for an amplitude index, qubit 0 leftmost."""
    return "".join("1" if (index >> q) & 1 else "0" for q in range(n_qubits))


def basis_index(label: str) -> int:
    return sum(1 << q for q, ch in enumerate(label) if ch == "1")


def basis_state(n_qubits: int, index: int = 0) -> StateVector:
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n_qubits, amps, normalized=True)


def plus_state(n_qubits: int) -> StateVector:
    amps = np.full(1 << n_qubits, 2.0 ** (-n_qubits / 2), dtype=np.complex128)
    return StateVector(n_qubits, amps, normalized=True)


def bell_pair_state(n_qubits: int) -> StateVector:
    """Maximally entangled state pairing qubit q with qubit q + n/2.

    Equals 2^{-n/4} sum_x |x>|x> over the two length-n/2 registers.
    """
    if n_qubits % 2 != 0:
        raise ValueError("bell-pair base state needs an even qubit count")
    half = n_qubits // 2
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    val = 2.0 ** (-half / 2)
    for x in range(1 << half):
        amps[x | (x << half)] = val
    return StateVector(n_qubits, amps, normalized=True)


def from_amplitudes(amps, normalized: bool | None = None) -> StateVector:
    arr = np.asarray(amps, dtype=np.complex128)
    n = int(arr.shape[0]).bit_length() - 1
    if normalized is None:
        normalized = abs(float(np.sum(np.abs(arr) ** 2)) - 1.0) <= 1e-10
    return StateVector(n, arr, normalized=normalized)


def normalize(psi: StateVector) -> StateVector:
    nrm = psi.norm()
    if nrm < _POSTSELECT_FLOOR:
        raise NumericalError("cannot normalize a (near-)zero vector")
    return StateVector(psi.n_qubits, psi.amplitudes / nrm, normalized=True)


def inner(psi: StateVector, phi: StateVector) -> complex:
    """Sesquilinear inner product, conjugate-linear in the first argument."""
    if psi.n_qubits != phi.n_qubits:
        raise DimensionMismatchError(
            f"inner product of {psi.n_qubits}- and {phi.n_qubits}-qubit states")
    return complex(np.vdot(psi.amplitudes, phi.amplitudes))


def fidelity(psi: StateVector, phi: StateVector) -> float:
    return abs(inner(psi, phi)) ** 2


_INDEX_CACHE: dict[int, np.ndarray] = {}
#: gather tables keyed by flip mask and sign tables keyed by phase mask;
#: bounded, cleared wholesale when full
_SRC_CACHE: dict[tuple[int, int], np.ndarray] = {}
_SIGN_CACHE: dict[tuple[int, int], np.ndarray] = {}
_TABLE_CACHE_MAX = 192


def _indices(dim: int) -> np.ndarray:
    cached = _INDEX_CACHE.get(dim)
    if cached is None:
        cached = np.arange(dim, dtype=np.uint64)
        cached.flags.writeable = False
        _INDEX_CACHE[dim] = cached
    return cached


def _src_for(dim: int, x_mask: int) -> np.ndarray:
    key = (dim, x_mask)
    cached = _SRC_CACHE.get(key)
    if cached is None:
        if len(_SRC_CACHE) >= _TABLE_CACHE_MAX:
            _SRC_CACHE.clear()
        cached = (_indices(dim) ^ np.uint64(x_mask)).astype(np.intp)
        cached.flags.writeable = False
        _SRC_CACHE[key] = cached
    return cached


def _sign_for(dim: int, z_mask: int) -> np.ndarray:
    """(-1)^popcount(index & z_mask) as float64, cached."""
    key = (dim, z_mask)
    cached = _SIGN_CACHE.get(key)
    if cached is None:
        if len(_SIGN_CACHE) >= _TABLE_CACHE_MAX:
            _SIGN_CACHE.clear()
        parity = np.bitwise_count(_indices(dim) & np.uint64(z_mask)) & np.uint64(1)
        cached = 1.0 - 2.0 * parity.astype(np.float64)
        cached.flags.writeable = False
        _SIGN_CACHE[key] = cached
    return cached


def _pauli_action(p: PauliString, amps: np.ndarray) -> np.ndarray:
    """Return P @ amps via (-i)^{|x&z|} sign_z(idx) amps[idx^x]; exact phases."""
    dim = amps.shape[0]
    phase = (-1j) ** ((p.x_mask & p.z_mask).bit_count() % 4)
    out = amps[_src_for(dim, p.x_mask)] if p.x_mask else amps.copy()
    if p.z_mask:
        out *= _sign_for(dim, p.z_mask)
    if phase != 1.0:
        out *= phase
    return out


def apply_pauli(p: PauliString, psi: StateVector) -> StateVector:
    """Return P|psi>; norm-preserving."""
    if p.n_qubits != psi.n_qubits:
        raise DimensionMismatchError(
            f"string on {p.n_qubits} qubits applied to {psi.n_qubits}-qubit state")
    return StateVector(psi.n_qubits, _pauli_action(p, psi.amplitudes),
                       normalized=psi.normalized)


_SUM_CACHE: dict[tuple, list] = {}
_SUM_CACHE_MAX = 8


def _compiled_sum(h: PauliSum, dim: int) -> list:
    """Terms grouped by flip mask: one gather + one diagonal per group.

    Sign tables are shared across coefficient changes (they depend only on
    the strings), so recompiling after a parameter bump is one fused
    multiply-add per term.
    """
    key = (dim, complex(h.identity_coeff),
           tuple((complex(c), t.x_mask, t.z_mask) for c, t in h.terms))
    compiled = _SUM_CACHE.get(key)
    if compiled is None:
        if len(_SUM_CACHE) >= _SUM_CACHE_MAX:
            _SUM_CACHE.clear()
        groups: dict[int, np.ndarray] = {}
        for coeff, term in h.terms:
            factor = complex(coeff) * (-1j) ** (
                (term.x_mask & term.z_mask).bit_count() % 4)
            acc = groups.get(term.x_mask)
            if acc is None:
                acc = np.zeros(dim, dtype=np.complex128)
                groups[term.x_mask] = acc
            if term.z_mask:
                acc += factor * _sign_for(dim, term.z_mask)
            else:
                acc += factor
        if h.identity_coeff != 0.0:
            acc = groups.get(0)
            if acc is None:
                acc = np.zeros(dim, dtype=np.complex128)
                groups[0] = acc
            acc += complex(h.identity_coeff)
        compiled = [(_src_for(dim, x) if x else None, diag)
                    for x, diag in groups.items()]
        _SUM_CACHE[key] = compiled
    return compiled


def apply_sum(h: PauliSum, psi: StateVector) -> np.ndarray:
    """Raw amplitudes of H|psi> (unnormalized helper for expectations/solvers)."""
    if h.n_qubits != psi.n_qubits:
        raise DimensionMismatchError(
            f"sum on {h.n_qubits} qubits applied to {psi.n_qubits}-qubit state")
    amps = psi.amplitudes
    out = np.zeros_like(amps)
    buf = np.empty_like(amps)
    for src, diag in _compiled_sum(h, amps.shape[0]):
        if src is None:
            np.multiply(diag, amps, out=buf)
        else:
            np.take(amps, src, out=buf)
            buf *= diag
        out += buf
    return out


def apply_exp_real(theta: float, p: PauliString, psi: StateVector) -> StateVector:
    """Return e^{theta P}|psi> = cosh(theta)|psi> + sinh(theta) P|psi>.

    Output is flagged unnormalized; renormalization is an explicit caller step.
    """
    if not math.isfinite(theta):
        raise NumericalError(f"non-finite exponent {theta!r}")
    if p.n_qubits != psi.n_qubits:
        raise DimensionMismatchError("size mismatch in apply_exp_real")
    if p.is_identity:
        amps = math.exp(theta) * psi.amplitudes
    else:
        amps = math.cosh(theta) * psi.amplitudes \
            + math.sinh(theta) * _pauli_action(p, psi.amplitudes)
    return StateVector(psi.n_qubits, amps, normalized=False)


def apply_exp_imag(theta: float, p: PauliString, psi: StateVector) -> StateVector:
    """Return e^{-i theta P}|psi> = cos(theta)|psi> - i sin(theta) P|psi>."""
    if not math.isfinite(theta):
        raise NumericalError(f"non-finite exponent {theta!r}")
    if p.n_qubits != psi.n_qubits:
        raise DimensionMismatchError("size mismatch in apply_exp_imag")
    if p.is_identity:
        amps = np.exp(-1j * theta) * psi.amplitudes
    else:
        amps = math.cos(theta) * psi.amplitudes \
            - 1j * math.sin(theta) * _pauli_action(p, psi.amplitudes)
    return StateVector(psi.n_qubits, amps, normalized=psi.normalized)


def expectation(h: PauliSum, psi: StateVector) -> float:
    """<psi|H|psi> for Hermitian H and a normalized state."""
    if not psi.normalized:
        raise ValueError("expectation requires a normalized state")
    if not h.is_hermitian:
        raise HermiticityError("expectation requires a Hermitian Pauli sum")
    val = complex(np.vdot(psi.amplitudes, apply_sum(h, psi)))
    if abs(val.imag) >= 1e-10:
        raise NumericalError(f"imaginary residue {val.imag!r} in expectation")
    return val.real


def postselect_plus(psi: StateVector, qubits: Iterable[int]
                    ) -> tuple[StateVector, float]:
    """Project the given qubits onto |+> and drop them.

    Returns the normalized conditional state on the remaining qubits (kept in
    their original relative order) and the success probability <psi|P_+|psi>.
    """
    qubits = sorted(set(qubits))
    n = psi.n_qubits
    if any(q < 0 or q >= n for q in qubits):
        raise ValueError(f"post-selection qubits {qubits} outside [0, {n})")
    if not qubits:
        return psi, 1.0
    tensor = psi.amplitudes.reshape([2] * n)
    axes = tuple(n - 1 - q for q in qubits)
    reduced = tensor.sum(axis=axes) * 2.0 ** (-len(qubits) / 2)
    flat = reduced.reshape(-1)
    prob = float(np.sum(np.abs(flat) ** 2))
    if prob < _POSTSELECT_FLOOR:
        raise PostselectionImpossibleError(
            f"post-selection probability {prob!r} below {_POSTSELECT_FLOOR}")
    state = StateVector(n - len(qubits), flat / math.sqrt(prob), normalized=True)
    return state, prob


def marginal_probabilities(psi: StateVector, keep: Iterable[int]) -> np.ndarray:
    """Probabilities over the kept qubits (original relative order preserved)."""
    keep = sorted(set(keep))
    n = psi.n_qubits
    if any(q < 0 or q >= n for q in keep):
        raise ValueError(f"qubits {keep} outside [0, {n})")
    probs = np.abs(psi.amplitudes) ** 2
    if len(keep) == n:
        return probs
    tensor = probs.reshape([2] * n)
    drop_axes = tuple(n - 1 - q for q in range(n) if q not in keep)
    return tensor.sum(axis=drop_axes).reshape(-1)


def sample_counts(psi: StateVector, shots: int, rng_seed: int) -> dict[str, int]:
    """Multinomial draw from |amplitudes|^2; deterministic under a fixed seed."""
    if not psi.normalized:
        raise ValueError("sampling requires a normalized state")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = np.abs(psi.amplitudes) ** 2
    probs = probs / probs.sum()
    rng = np.random.default_rng(rng_seed)
    counts = rng.multinomial(shots, probs)
    hit = np.nonzero(counts)[0]
    return {basis_label(int(i), psi.n_qubits): int(counts[i]) for i in hit}


def apply_dense(u: np.ndarray, qubits: Iterable[int], psi: StateVector,
                normalized: bool | None = None) -> StateVector:
    """Apply a dense operator on the listed qubits (ascending order gives the
    low bit of the local index)."""
    qubits = tuple(sorted(qubits))
    n = psi.n_qubits
    d = len(qubits)
    if u.shape != (1 << d, 1 << d):
        raise DimensionMismatchError(
            f"operator shape {u.shape} does not match {d} qubits")
    tensor = psi.amplitudes.reshape([2] * n)
    # front axes ordered so that qubits[0] becomes the low bit of the local index
    front = [n - 1 - q for q in reversed(qubits)]
    moved = np.moveaxis(tensor, front, range(d))
    mat = moved.reshape(1 << d, -1)
    out = u @ mat
    out_tensor = np.moveaxis(out.reshape([2] * d + [2] * (n - d)),
                             range(d), front)
    if normalized is None:
        normalized = False
    return StateVector(n, out_tensor.reshape(-1), normalized=normalized)


def exp_sum_normalized(h: PauliSum, psi: StateVector, scale: float = 1.0,
                       tol: float = 1e-12, max_dim: int = 90
                       ) -> tuple[StateVector, float]:
    """Normalized e^{scale*H}|psi> and log of the norm it was divided by.

    Lanczos restricted to a Krylov space, so it works at any statevector size
    (no dense 2^n x 2^n matrix).  Long evolutions are split into segments with
    per-segment rescaling; the accumulated log-norm never overflows.
    """
    if not h.is_hermitian:
        raise HermiticityError("exp_sum_normalized requires a Hermitian generator")
    if h.n_qubits != psi.n_qubits:
        raise DimensionMismatchError("size mismatch in exp_sum_normalized")
    strength = abs(scale) * (abs(h.identity_coeff)
                             + sum(abs(c) for c, _ in h.terms))
    segments = max(1, math.ceil(strength / 12.0))
    dt = scale / segments
    vec = psi.amplitudes.copy()
    log_norm = math.log(float(np.linalg.norm(vec)))
    vec = vec / np.linalg.norm(vec)
    for _ in range(segments):
        vec, log_step = _lanczos_exp_segment(h, vec, dt, tol, max_dim)
        log_norm += log_step
        nrm = float(np.linalg.norm(vec))
        log_norm += math.log(nrm)
        vec = vec / nrm
    return StateVector(psi.n_qubits, vec, normalized=True), log_norm


def apply_exp_sum(h: PauliSum, psi: StateVector, scale: float = 1.0,
                  tol: float = 1e-12, max_dim: int = 90) -> StateVector:
    """e^{scale*H}|psi>, unnormalized, via the Krylov path.

    Raises NumericalError if the exact norm overflows double precision; use
    exp_sum_normalized for strongly amplifying exponents.
    """
    state, log_norm = exp_sum_normalized(h, psi, scale, tol, max_dim)
    if log_norm > 700.0:
        raise NumericalError(
            f"norm exp({log_norm:.1f}) of the evolved state overflows doubles")
    return StateVector(psi.n_qubits, math.exp(log_norm) * state.amplitudes,
                       normalized=False)


def _lanczos_exp_segment(h: PauliSum, vec: np.ndarray, dt: float,
                         tol: float, max_dim: int) -> tuple[np.ndarray, float]:
    """One e^{dt*H} application to a unit vector; returns (vector, log shift).

    Convergence is judged per iteration from the residual estimate
    beta_j * |(e^{dt T})_{j,0}| (O(1) cost); the full-space vector is
    assembled once at the end.
    """
    n = int(np.log2(vec.shape[0]))
    basis = [vec]
    alphas: list[float] = []
    betas: list[float] = []
    shift = 0.0
    small = np.ones(1)
    happy = False
    converged = False
    for j in range(max_dim):
        w = apply_sum(h, StateVector(n, basis[j], normalized=False))
        alpha = float(np.vdot(basis[j], w).real)
        alphas.append(alpha)
        w = w - alpha * basis[j]
        if j > 0:
            w = w - betas[-1] * basis[j - 1]
        # full reorthogonalization keeps the small eigenproblem trustworthy
        for b in basis:
            w = w - np.vdot(b, w) * b
        beta = float(np.linalg.norm(w))
        t = np.diag(np.array(alphas)) \
            + np.diag(np.array(betas), 1) + np.diag(np.array(betas), -1)
        evals, evecs = np.linalg.eigh(t)
        # stabilized small exponential: shift by the largest exponent
        shift = float(np.max(dt * evals))
        small = evecs @ (np.exp(dt * evals - shift) * evecs[0, :])
        small_norm = max(float(np.linalg.norm(small)), 1e-300)
        if beta <= 1e-13 * max(1.0, abs(alpha)):
            happy = True
            break
        if abs(dt) * beta * abs(small[j]) <= tol * small_norm:
            converged = True
            break
        betas.append(beta)
        basis.append(w / beta)
    if not (happy or converged):
        # residual stagnated: accept only a mild miss, else report
        if abs(dt) * betas[-1] * abs(small[-1]) > 1e-8 * float(np.linalg.norm(small)):
            raise NumericalError("Krylov exponential failed to converge")
    approx = np.stack(basis, axis=1) @ small[:len(basis)]
    return approx, shift
