"""The 2-local quantum Boltzmann machine: parameter set, generator Hamiltonian,
trial states, and the classical restricted Boltzmann machine comparison oracle.

Qubit layout of the generator: visible nodes occupy qubits 0..N-1, hidden
nodes occupy N..N+M-1.  The trial state lives on the visible register only;
hidden qubits are summed out (fixed-hidden route) or post-selected onto |+>
(entangled route) -- the two must agree up to normalization.
"""

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from . import exact, statevec
from .errors import CapacityError, DimensionMismatchError, NumericalError
from .pauli import PauliString, PauliSum
from .statevec import StateVector

AXES = "xyz"

#: |theta| cap; exponential paths are max-shifted so this guards sanity,
#: not overflow (the analytic universality map needs values well above 30)
PARAM_BOUND = 200.0

#: visible counts above this use the Krylov exponential for the trial state
#: (one dense eigendecomposition per hidden configuration gets slow first)
TRIAL_DENSE_LIMIT = 9

#: relative accuracy of the Krylov trial-state route; large training runs
#: may loosen it (finite-difference tangents tolerate ~1e-8 comfortably)
KRYLOV_TOL = 1e-11


def _as_array(value, shape, name):
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if arr.size and np.abs(arr).max() > PARAM_BOUND:
        raise ValueError(f"{name} exceeds the parameter bound {PARAM_BOUND}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class QrbmParams:
    """Boltzmann parameters of the 2-local quantum machine.

    b[i, t]    visible field along axis t in (x, y, z)
    m[j]       hidden z field
    w[i, j]    visible-z / hidden-z coupling
    k[s, t, a] visible-visible coupling on the pair s < t along axis a
               (entries with s >= t must be zero)
    """

    n_visible: int
    n_hidden: int
    b: np.ndarray
    m: np.ndarray
    w: np.ndarray
    k: np.ndarray
    base_state: str = "plus_product"

    def __post_init__(self):
        n, m = self.n_visible, self.n_hidden
        if n < 1 or m < 0:
            raise ValueError("need n_visible >= 1 and n_hidden >= 0")
        object.__setattr__(self, "b", _as_array(self.b, (n, 3), "b"))
        object.__setattr__(self, "m", _as_array(self.m, (m,), "m"))
        object.__setattr__(self, "w", _as_array(self.w, (n, m), "w"))
        object.__setattr__(self, "k", _as_array(self.k, (n, n, 3), "k"))
        lower = np.tril_indices(n)
        if self.k.size and np.any(self.k[lower] != 0.0):
            raise ValueError("k is defined only for pairs s < t")
        if self.base_state not in ("plus_product", "bell_pairs"):
            raise ValueError(f"unknown base state {self.base_state!r}")
        if self.base_state == "bell_pairs" and n % 2 != 0:
            raise ValueError("bell_pairs base requires an even visible count")

    @classmethod
    def zeros(cls, n_visible: int, n_hidden: int,
              base_state: str = "plus_product") -> "QrbmParams":
        return cls(n_visible, n_hidden,
                   b=np.zeros((n_visible, 3)),
                   m=np.zeros(n_hidden),
                   w=np.zeros((n_visible, n_hidden)),
                   k=np.zeros((n_visible, n_visible, 3)),
                   base_state=base_state)

    @classmethod
    def random(cls, n_visible: int, n_hidden: int, rng, scale: float = 1.0,
               base_state: str = "plus_product") -> "QrbmParams":
        k = rng.uniform(-scale, scale, size=(n_visible, n_visible, 3))
        k[np.tril_indices(n_visible)] = 0.0
        return cls(n_visible, n_hidden,
                   b=rng.uniform(-scale, scale, size=(n_visible, 3)),
                   m=rng.uniform(-scale, scale, size=n_hidden),
                   w=rng.uniform(-scale, scale, size=(n_visible, n_hidden)),
                   k=k, base_state=base_state)

    # -- flat parameter vector ------------------------------------------------

    def parameter_names(self) -> list[str]:
        n, m = self.n_visible, self.n_hidden
        names = [f"b[{i},{AXES[t]}]" for i in range(n) for t in range(3)]
        names += [f"m[{j}]" for j in range(m)]
        names += [f"w[{i},{j}]" for i in range(n) for j in range(m)]
        names += [f"k[{s},{t},{AXES[a]}]"
                  for s in range(n) for t in range(s + 1, n) for a in range(3)]
        return names

    @property
    def n_parameters(self) -> int:
        n, m = self.n_visible, self.n_hidden
        return 3 * n + m + n * m + 3 * (n * (n - 1) // 2)

    def to_vector(self) -> np.ndarray:
        n = self.n_visible
        upper = [self.k[s, t, :] for s in range(n) for t in range(s + 1, n)]
        chunks = [self.b.ravel(), self.m, self.w.ravel()]
        if upper:
            chunks.append(np.concatenate(upper))
        return np.concatenate(chunks)

    def from_vector(self, vec: np.ndarray) -> "QrbmParams":
        n, m = self.n_visible, self.n_hidden
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_parameters,):
            raise ValueError(f"expected {self.n_parameters} parameters")
        pos = 0
        b = vec[pos:pos + 3 * n].reshape(n, 3); pos += 3 * n
        mm = vec[pos:pos + m]; pos += m
        w = vec[pos:pos + n * m].reshape(n, m); pos += n * m
        k = np.zeros((n, n, 3))
        for s in range(n):
            for t in range(s + 1, n):
                k[s, t, :] = vec[pos:pos + 3]; pos += 3
        return replace(self, b=b, m=mm, w=w, k=k)


def base_state_vector(params: QrbmParams) -> StateVector:
    if params.base_state == "bell_pairs":
        return statevec.bell_pair_state(params.n_visible)
    return statevec.plus_state(params.n_visible)


def build_hrbm(params: QrbmParams) -> PauliSum:
    """Generator Hamiltonian on the N+M qubit register (visible first)."""
    n, m = params.n_visible, params.n_hidden
    total = n + m
    terms = []
    for i in range(n):
        for t, axis in enumerate(AXES):
            if params.b[i, t] != 0.0:
                terms.append((params.b[i, t], PauliString.single(total, i, axis.upper())))
    for j in range(m):
        if params.m[j] != 0.0:
            terms.append((params.m[j], PauliString.single(total, n + j, "Z")))
    for i in range(n):
        for j in range(m):
            if params.w[i, j] != 0.0:
                terms.append((params.w[i, j], PauliString.from_letters(
                    total, {i: "Z", n + j: "Z"})))
    for s in range(n):
        for t in range(s + 1, n):
            for a, axis in enumerate(AXES):
                if params.k[s, t, a] != 0.0:
                    terms.append((params.k[s, t, a], PauliString.from_letters(
                        total, {s: axis.upper(), t: axis.upper()})))
    return PauliSum(total, terms, drop_tol=0.0)


def build_hrbm_fixed_hidden(params: QrbmParams, hidden_bits) -> PauliSum:
    """Visible-register generator with hidden operators replaced by 1 - 2h_j."""
    n, m = params.n_visible, params.n_hidden
    hidden_bits = tuple(int(h) for h in hidden_bits)
    if len(hidden_bits) != m:
        raise DimensionMismatchError(
            f"{len(hidden_bits)} hidden bits for {m} hidden nodes")
    signs = np.array([1.0 - 2.0 * h for h in hidden_bits])
    terms = []
    for i in range(n):
        for t, axis in enumerate(AXES):
            if params.b[i, t] != 0.0:
                terms.append((params.b[i, t], PauliString.single(n, i, axis.upper())))
    for i in range(n):
        coeff = float(params.w[i, :] @ signs) if m else 0.0
        if coeff != 0.0:
            terms.append((coeff, PauliString.single(n, i, "Z")))
    for s in range(n):
        for t in range(s + 1, n):
            for a, axis in enumerate(AXES):
                if params.k[s, t, a] != 0.0:
                    terms.append((params.k[s, t, a], PauliString.from_letters(
                        n, {s: axis.upper(), t: axis.upper()})))
    identity = float(params.m @ signs) if m else 0.0
    return PauliSum(n, terms, identity_coeff=identity, drop_tol=0.0)


def trial_state_exact(params: QrbmParams, via: str = "hidden_sum") -> StateVector:
    """Normalized trial state sum_h exp(H(theta, h)) |base>.

    via="hidden_sum" evaluates one matrix exponential per hidden configuration
    (dense when the visible register fits the dense bound, Krylov otherwise);
    via="postselect" exponentiates the full entangled generator and projects
    every hidden qubit onto |+>.  The two agree to ~1e-9.
    """
    if via == "postselect":
        return _trial_state_postselect(params)
    if via != "hidden_sum":
        raise ValueError(f"unknown trial-state route {via!r}")
    n, m = params.n_visible, params.n_hidden
    base = base_state_vector(params)
    if n <= TRIAL_DENSE_LIMIT:
        acc = np.zeros(1 << n, dtype=np.complex128)
        best = -np.inf
        pieces = []
        for bits in itertools.product((0, 1), repeat=m):
            gen = build_hrbm_fixed_hidden(params, bits)
            mat = exact.to_dense(gen)
            vals, vecs = np.linalg.eigh(mat)
            pieces.append((vals, vecs))
            best = max(best, float(vals.max()))
        # common max-shift across hidden configurations keeps relative weights
        for vals, vecs in pieces:
            op = (vecs * np.exp(vals - best)) @ vecs.conj().T
            acc = acc + op @ base.amplitudes
        nrm = np.linalg.norm(acc)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise NumericalError("trial state underflowed or overflowed")
        return StateVector(n, acc / nrm, normalized=True)
    # Krylov route for registers beyond the dense bound
    acc = None
    logs = []
    states = []
    for bits in itertools.product((0, 1), repeat=m):
        gen = build_hrbm_fixed_hidden(params, bits)
        state, log_norm = statevec.exp_sum_normalized(gen, base, tol=KRYLOV_TOL)
        states.append(state)
        logs.append(log_norm)
    top = max(logs)
    acc = np.zeros(1 << n, dtype=np.complex128)
    for state, log_norm in zip(states, logs):
        acc = acc + math.exp(log_norm - top) * state.amplitudes
    nrm = np.linalg.norm(acc)
    return StateVector(n, acc / nrm, normalized=True)


def _trial_state_postselect(params: QrbmParams) -> StateVector:
    n, m = params.n_visible, params.n_hidden
    if n + m > exact.DENSE_QUBIT_LIMIT:
        raise CapacityError(
            f"postselect route needs {n + m} qubits dense"
            f" (> {exact.DENSE_QUBIT_LIMIT})")
    gen = build_hrbm(params)
    base = base_state_vector(params)
    full = np.kron(statevec.plus_state(m).amplitudes if m else np.array([1.0 + 0j]),
                   base.amplitudes)
    mat = exact.matrix_exp(gen, shift_max=True)
    evolved = statevec.from_amplitudes(mat @ full, normalized=False)
    evolved = statevec.normalize(evolved)
    if m == 0:
        return evolved
    state, _prob = statevec.postselect_plus(evolved, range(n, n + m))
    return state


def trial_state_qite(params: QrbmParams, opts) -> StateVector:
    """Trial state prepared by compiling exp(H) into unitaries, then projecting.

    `opts` is a qite.QiteOptions; infidelity against trial_state_exact falls
    off as the square of the Trotter step count.
    """
    from . import qite  # local import to avoid a cycle

    n, m = params.n_visible, params.n_hidden
    gen = build_hrbm(params)
    base = base_state_vector(params)
    full = np.kron(statevec.plus_state(m).amplitudes if m else np.array([1.0 + 0j]),
                   base.amplitudes)
    start = statevec.from_amplitudes(full, normalized=True)
    evolution = qite.qite_evolve(start, gen, 1.0, opts)
    if m == 0:
        return evolution.state
    state, _prob = statevec.postselect_plus(evolution.state, range(n, n + m))
    return state


# -- classical restricted Boltzmann machine oracle ---------------------------


@dataclass(frozen=True)
class ClassicalRbmParams:
    """Classical RBM energy coefficients (binary units)."""

    n_visible: int
    n_hidden: int
    b: np.ndarray
    m: np.ndarray
    w: np.ndarray
    k: np.ndarray  # pairwise visible couplings, used for s < t

    def __post_init__(self):
        n, m = self.n_visible, self.n_hidden
        object.__setattr__(self, "b", _as_array(self.b, (n,), "b"))
        object.__setattr__(self, "m", _as_array(self.m, (m,), "m"))
        object.__setattr__(self, "w", _as_array(self.w, (n, m), "w"))
        object.__setattr__(self, "k", _as_array(self.k, (n, n), "k"))

    @classmethod
    def random(cls, n_visible: int, n_hidden: int, rng, scale: float = 1.0):
        return cls(n_visible, n_hidden,
                   b=rng.uniform(-scale, scale, size=n_visible),
                   m=rng.uniform(-scale, scale, size=n_hidden),
                   w=rng.uniform(-scale, scale, size=(n_visible, n_hidden)),
                   k=np.triu(rng.uniform(-scale, scale,
                                         size=(n_visible, n_visible)), k=1))


def rbm_energy(params: ClassicalRbmParams, v: np.ndarray, h: np.ndarray) -> float:
    """E(v, h) = b.v + m.h + v.W.h + v.K.v."""
    return float(params.b @ v + params.m @ h + v @ params.w @ h + v @ params.k @ v)


def classical_rbm_amplitude(params: ClassicalRbmParams, v_bits,
                            convention: str = "sum",
                            spin_visible: bool = False) -> float:
    """Closed-form marginal amplitude of a visible configuration.

    convention="sum" (the ground truth): sum over binary hidden units of
    exp(-E(v, h)), evaluated in product form.  convention="eq4": the textbook
    positive-exponent cosh form, equal to the spin-hidden (+1/-1) sum divided
    by 2^M.  spin_visible maps the visible bits 0/1 onto +1/-1 values first.
    """
    v = np.asarray([int(x) for x in v_bits], dtype=float)
    if v.shape != (params.n_visible,):
        raise DimensionMismatchError(
            f"{v.shape[0]} visible bits for {params.n_visible} nodes")
    if spin_visible:
        v = 1.0 - 2.0 * v
    quad = float(params.b @ v + v @ params.k @ v)
    drives = params.m + v @ params.w
    if convention == "sum":
        out = math.exp(-quad)
        for x in drives:
            out *= 1.0 + math.exp(-float(x))
        return out
    if convention == "eq4":
        out = math.exp(quad)
        for x in drives:
            out *= math.cosh(float(x))
        return out
    raise ValueError(f"unknown convention {convention!r}")
