"""Parameter training: SPSA ground-state search and variational
imaginary-time evolution toward purified thermal states.

Both trainers operate on the flat parameter vector of QrbmParams and record
per-iteration progress in a RunTrace that serializes to CSV.
"""

import hashlib
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import exact, qite, statevec
from .ansatz import QrbmParams, trial_state_exact, trial_state_qite
from .errors import PostselectionImpossibleError
from .pauli import PauliString, PauliSum
from .statevec import StateVector


@dataclass(frozen=True)
class SpsaSchedule:
    """Gain schedules a_k = a/(k+1+A)^alpha, c_k = c/(k+1)^gamma."""

    a: float = 0.2
    c: float = 0.1
    A_stability: float | None = None  # default 0.1 * max_iters
    alpha: float = 0.602
    gamma: float = 0.101
    max_iters: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.alpha <= 1 and 0 < self.gamma <= 1):
            raise ValueError("alpha and gamma must lie in (0, 1]")
        if self.c <= 0 or self.a <= 0:
            raise ValueError("gains must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def stability(self) -> float:
        return 0.1 * self.max_iters if self.A_stability is None else self.A_stability


@dataclass(frozen=True)
class ItePath:
    """Imaginary-time path controls for the variational trainer."""

    dtau: float = 0.01
    tau_max: float = 0.5
    regularization: float = 1e-6
    fd_step: float = 1e-4

    def __post_init__(self):
        if self.dtau <= 0:
            raise ValueError("dtau must be positive")
        if self.dtau > self.tau_max and self.tau_max > 0:
            raise ValueError("dtau must not exceed tau_max")
        if not 1e-6 <= self.fd_step <= 1e-2:
            raise ValueError("fd_step must lie in [1e-6, 1e-2]")
        if self.regularization < 0:
            raise ValueError("regularization must be >= 0")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    residual: float
    cond_a: float
    elapsed_ms: float
    theta_hash: str


@dataclass
class RunTrace:
    """Per-iteration training records; iterations strictly increase."""

    rows: list[TraceRow] = field(default_factory=list)
    theta_snapshots: list[np.ndarray] = field(default_factory=list)

    def append(self, row: TraceRow, theta: np.ndarray | None = None):
        if self.rows and row.iteration <= self.rows[-1].iteration:
            raise ValueError("iterations must strictly increase")
        self.rows.append(row)
        if theta is not None:
            self.theta_snapshots.append(theta.copy())

    def to_csv(self, path, deterministic: bool = True) -> None:
        """Write the spec'd schema; deterministic mode zeroes wall-clock."""
        lines = ["iter,objective,residual,cond_A,elapsed_ms,theta_hash"]
        for row in self.rows:
            ms = 0 if deterministic else row.elapsed_ms
            lines.append(f"{row.iteration},{row.objective!r},{row.residual!r},"
                         f"{row.cond_a!r},{ms!r},{row.theta_hash}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.rows])


def theta_hash(vec: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(vec, dtype=float).tobytes()
                          ).hexdigest()[:16]


def spsa_minimize(objective, theta0: QrbmParams, sched: SpsaSchedule
                  ) -> tuple[QrbmParams, RunTrace]:
    """Simultaneous-perturbation descent; returns the best-seen parameters.

    The gradient surrogate is (E+ - E-) Delta / (2 c_k) with Delta a Bernoulli
    +-1 vector; non-finite objective values reject the iterate and shrink
    subsequent steps instead of crashing.
    """
    rng = np.random.default_rng(sched.seed)
    theta = theta0.to_vector()
    best_theta = theta.copy()
    best_value = math.inf
    trace = RunTrace()
    shrink = 1.0
    stability = sched.stability()
    start = time.perf_counter()
    for k in range(sched.max_iters):
        a_k = shrink * sched.a / (k + 1 + stability) ** sched.alpha
        c_k = sched.c / (k + 1) ** sched.gamma
        delta = rng.integers(0, 2, size=theta.shape[0]) * 2.0 - 1.0
        e_plus = float(objective(theta0.from_vector(theta + c_k * delta)))
        e_minus = float(objective(theta0.from_vector(theta - c_k * delta)))
        if not (math.isfinite(e_plus) and math.isfinite(e_minus)):
            shrink *= 0.5
            trace.append(TraceRow(k, best_value, math.inf, math.nan,
                                  1e3 * (time.perf_counter() - start),
                                  theta_hash(theta)))
            continue
        for value, point in ((e_plus, theta + c_k * delta),
                             (e_minus, theta - c_k * delta)):
            if value < best_value:
                best_value = value
                best_theta = point.copy()
        grad = (e_plus - e_minus) / (2.0 * c_k) * delta
        theta = theta - a_k * grad
        trace.append(TraceRow(k, min(e_plus, e_minus),
                              float(np.linalg.norm(grad)), math.nan,
                              1e3 * (time.perf_counter() - start),
                              theta_hash(theta)))
    final_value = float(objective(theta0.from_vector(theta)))
    if math.isfinite(final_value) and final_value < best_value:
        best_value = final_value
        best_theta = theta
    return theta0.from_vector(best_theta), trace


def ground_state_energy_objective(h: PauliSum, mode: str = "exact_trial",
                                  opts: qite.QiteOptions | None = None):
    """Callable theta -> <Psi(theta)|H|Psi(theta)> via the chosen trial route.

    Post-selection failures surface as +inf with a counter on the closure.
    """
    if mode not in ("exact_trial", "qite_trial"):
        raise ValueError(f"unknown objective mode {mode!r}")
    if mode == "qite_trial" and opts is None:
        opts = qite.QiteOptions(n_steps=20)

    def objective(params: QrbmParams) -> float:
        if params.n_visible != h.n_qubits:
            raise ValueError("parameter register does not match the Hamiltonian")
        try:
            if mode == "exact_trial":
                state = trial_state_exact(params)
            else:
                state = trial_state_qite(params, opts)
        except PostselectionImpossibleError:
            objective.postselection_failures += 1
            return math.inf
        return statevec.expectation(h, state)

    objective.postselection_failures = 0
    return objective


def _embed_first_register(h: PauliSum, n_total: int) -> PauliSum:
    """H acting on qubits 0..n-1 of a wider register (identity elsewhere)."""
    if h.n_qubits > n_total:
        raise ValueError("cannot embed into a smaller register")
    terms = [(c, PauliString(n_total, t.x_mask, t.z_mask)) for c, t in h.terms]
    return PauliSum(n_total, terms, identity_coeff=h.identity_coeff, drop_tol=0.0)


def _tangents(params: QrbmParams, vec: np.ndarray, fd_step: float,
              mask: np.ndarray | None):
    """Central finite differences of the normalized trial state."""
    active = range(vec.shape[0]) if mask is None else np.nonzero(mask)[0]
    columns = {}
    for idx in active:
        bump = np.zeros_like(vec)
        bump[idx] = fd_step
        plus = trial_state_exact(params.from_vector(vec + bump))
        minus = trial_state_exact(params.from_vector(vec - bump))
        col = (plus.amplitudes - minus.amplitudes) / (2.0 * fd_step)
        if not np.all(np.isfinite(col)):
            raise ValueError(f"non-finite tangent for parameter {idx}")
        columns[int(idx)] = col
    return columns


def _tangents_analytic(params: QrbmParams, vec: np.ndarray,
                       mask: np.ndarray | None):
    """Exact tangents of the normalized trial state on dense registers.

    One eigendecomposition per hidden configuration plus the
    divided-difference (Daleckii-Krein) form of the exponential's directional
    derivative; agrees with the central-difference route to O(fd_step^2) and
    is the fast path for the thermal-state runs.
    """
    import itertools

    if params.n_visible > exact.DENSE_QUBIT_LIMIT:
        raise ValueError("analytic tangents need the dense register bound")
    from .ansatz import base_state_vector, build_hrbm_fixed_hidden

    n, m = params.n_visible, params.n_hidden
    base = base_state_vector(params).amplitudes
    configs = list(itertools.product((0, 1), repeat=m))
    pieces = []
    top = -math.inf
    for bits in configs:
        gen = build_hrbm_fixed_hidden(params, bits)
        vals, vecs = np.linalg.eigh(exact.to_dense(gen))
        top = max(top, float(vals.max()))
        pieces.append((bits, vals, vecs))
    raw = np.zeros(1 << n, dtype=np.complex128)
    branches = []
    for bits, vals, vecs in pieces:
        weights = np.exp(vals - top)
        base_eig = vecs.conj().T @ base
        raw_piece = vecs @ (weights * base_eig)
        raw += raw_piece
        diff = vals[:, None] - vals[None, :]
        wa, wb = weights[:, None], weights[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(np.abs(diff) > 1e-12, (wa - wb) / diff,
                           0.5 * (wa + wb))
        branches.append((bits, vals, vecs, weights, base_eig, raw_piece, phi))
    norm = np.linalg.norm(raw)
    psi_hat = raw / norm
    directions = _parameter_directions(params)
    active = range(vec.shape[0]) if mask is None else np.nonzero(mask)[0]
    columns = {}
    for idx in active:
        d_raw = np.zeros_like(raw)
        for bits, vals, vecs, weights, base_eig, raw_piece, phi in branches:
            kind, payload = directions[int(idx)]
            if kind == "scalar":  # hidden bias: adds s_h * identity
                j = payload
                s_h = 1.0 - 2.0 * bits[j]
                d_raw += s_h * raw_piece
                continue
            if kind == "pauli":
                p_dense = exact.pauli_matrix(payload)
                scale = 1.0
            else:  # visible-hidden coupling: s_h * Z_i
                i, j = payload
                s_h = 1.0 - 2.0 * bits[j]
                if s_h == 0.0:
                    continue
                p_dense = exact.pauli_matrix(PauliString.single(n, i, "Z"))
                scale = s_h
            p_eig = vecs.conj().T @ (p_dense @ vecs)
            d_raw += scale * (vecs @ ((phi * p_eig) @ base_eig))
        # tangent of the normalized state: remove the radial component
        d_hat = d_raw / norm - psi_hat * (np.vdot(psi_hat, d_raw).real / norm)
        columns[int(idx)] = d_hat
    return columns


def _parameter_directions(params: QrbmParams) -> list[tuple]:
    """Generator direction of each flat parameter, matching to_vector order."""
    n, m = params.n_visible, params.n_hidden
    out: list[tuple] = []
    for i in range(n):
        for axis in "XYZ":
            out.append(("pauli", PauliString.single(n, i, axis)))
    for j in range(m):
        out.append(("scalar", j))
    for i in range(n):
        for j in range(m):
            out.append(("coupling", (i, j)))
    for s in range(n):
        for t in range(s + 1, n):
            for axis in "XYZ":
                out.append(("pauli", PauliString.from_letters(n, {s: axis, t: axis})))
    return out


def _var_ite_step_full(params: QrbmParams, h: PauliSum, path: ItePath,
                       mask: np.ndarray | None = None,
                       tangent_method: str = "fd") -> dict:
    """One McLachlan update theta' = theta + A^+ C dtau with diagnostics."""
    vec = params.to_vector()
    state = trial_state_exact(params)
    if tangent_method == "analytic":
        tangents = _tangents_analytic(params, vec, mask)
    elif tangent_method == "fd":
        tangents = _tangents(params, vec, path.fd_step, mask)
    else:
        raise ValueError(f"unknown tangent method {tangent_method!r}")
    idxs = sorted(tangents)
    dim = len(idxs)
    t_mat = np.stack([tangents[i] for i in idxs], axis=1) if dim else \
        np.zeros((state.amplitudes.shape[0], 0))
    a_mat = (t_mat.conj().T @ t_mat).real
    h_psi = statevec.apply_sum(h, state)
    c_vec = -(t_mat.conj().T @ h_psi).real
    energy = float(np.vdot(state.amplitudes, h_psi).real)
    if dim:
        reg = path.regularization * max(float(np.max(np.diag(a_mat))), 1e-30)
        stacked = np.vstack([a_mat, math.sqrt(reg) * np.eye(dim)])
        target = np.concatenate([c_vec, np.zeros(dim)])
        x, *_ = np.linalg.lstsq(stacked, target, rcond=None)
        residual = float(np.linalg.norm(a_mat @ x - c_vec))
        cond = float(np.linalg.cond(a_mat))
    else:
        x = np.zeros(0)
        residual = 0.0
        cond = 1.0
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite imaginary-time update")
    new_vec = vec.copy()
    for pos, idx in enumerate(idxs):
        new_vec[idx] += x[pos] * path.dtau
    return {
        "params": params.from_vector(new_vec),
        "residual": residual,
        "cond_a": cond,
        "energy": energy,
        "update_norm": float(np.linalg.norm(x)),
        "a_matrix": a_mat,
        "c_vector": c_vec,
    }


def var_ite_step(params: QrbmParams, h: PauliSum, path: ItePath
                 ) -> tuple[QrbmParams, float]:
    """Public single-step interface: (updated parameters, solve residual)."""
    info = _var_ite_step_full(params, h, path)
    return info["params"], info["residual"]


def gibbs_train(h: PauliSum, beta: float, theta0: QrbmParams, path: ItePath,
                mask: np.ndarray | None = None, tangent_method: str = "fd",
                progress=None) -> tuple[QrbmParams, RunTrace, float]:
    """Track the purified thermal state of H from tau=0 to tau=beta/2.

    theta0 lives on 2N visible nodes with the bell_pairs base; H acts on the
    first register.  Returns the trained parameters, the trace, and the
    fidelity against the exact purification oracle (None-safe at any size
    the statevector engine covers; the oracle needs the dense bound).
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if theta0.base_state != "bell_pairs":
        raise ValueError("gibbs_train requires the bell_pairs base state")
    if theta0.n_visible != 2 * h.n_qubits:
        raise ValueError("need 2N visible nodes for an N-qubit Hamiltonian")
    h_ext = _embed_first_register(h, theta0.n_visible)
    params = theta0
    trace = RunTrace()
    tau = 0.0
    iteration = 0
    start = time.perf_counter()
    while tau < beta / 2.0 - 1e-12:
        step = replace(path, dtau=min(path.dtau, beta / 2.0 - tau))
        info = _var_ite_step_full(params, h_ext, step, mask,
                                  tangent_method=tangent_method)
        params = info["params"]
        tau += step.dtau
        trace.append(TraceRow(iteration, info["energy"], info["residual"],
                              info["cond_a"],
                              1e3 * (time.perf_counter() - start),
                              theta_hash(params.to_vector())))
        iteration += 1
        if progress is not None:
            progress(iteration, tau, info)
    fidelity = float("nan")
    if h.n_qubits <= exact.DENSE_QUBIT_LIMIT:
        target = exact.gibbs_purification(h, beta)
        fidelity = statevec.fidelity(trial_state_exact(params), target)
    return params, trace, fidelity
