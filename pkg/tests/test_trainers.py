import math

import numpy as np
import pytest

from qrbm import exact, qite, statevec as sv, trainers
from qrbm.ansatz import QrbmParams, trial_state_exact
from qrbm.pauli import PauliSum
from qrbm.trainers import (ItePath, RunTrace, SpsaSchedule, TraceRow,
                           gibbs_train, ground_state_energy_objective,
                           spsa_minimize, var_ite_step)


def test_spsa_convex_bowl():
    theta0 = QrbmParams.random(2, 1, np.random.default_rng(2))
    objective = lambda p: float(np.sum(p.to_vector() ** 2))
    sched = SpsaSchedule(a=0.4, c=0.05, max_iters=2000, seed=1)
    best, trace = spsa_minimize(objective, theta0, sched)
    assert objective(best) <= 1e-3
    assert len(trace.rows) == 2000


def test_spsa_best_seen_monotone():
    theta0 = QrbmParams.random(1, 1, np.random.default_rng(0))
    objective = lambda p: float(np.sum(p.to_vector() ** 2))
    _, trace = spsa_minimize(objective, theta0,
                             SpsaSchedule(a=0.3, c=0.1, max_iters=200, seed=3))
    best_so_far = np.minimum.accumulate(trace.objectives())
    assert np.all(np.diff(best_so_far) <= 1e-15)


def test_spsa_single_qubit_ground_state():
    h = PauliSum.from_texts(1, [(1.0, "Z")])
    objective = ground_state_energy_objective(h, mode="exact_trial")
    theta0 = QrbmParams.zeros(1, 0)
    sched = SpsaSchedule(a=0.5, c=0.1, max_iters=800, seed=7)
    best, _ = spsa_minimize(objective, theta0, sched)
    assert objective(best) <= -1 + 1e-3


def test_spsa_nonfinite_objective_rejected():
    calls = {"n": 0}

    def flaky(p):
        calls["n"] += 1
        if calls["n"] < 5:
            return math.nan
        return float(np.sum(p.to_vector() ** 2))

    theta0 = QrbmParams.random(1, 0, np.random.default_rng(1))
    best, trace = spsa_minimize(flaky, theta0,
                                SpsaSchedule(max_iters=50, seed=2))
    assert np.isfinite(trace.objectives()[-1])


def test_objective_zero_params_on_transverse_field():
    n = 3
    h = PauliSum.from_texts(n, [(-1.0, "XII"), (-1.0, "IXI"), (-1.0, "IIX")])
    objective = ground_state_energy_objective(h)
    val = objective(QrbmParams.zeros(n, 1))
    assert abs(val - (-n)) < 1e-12


def test_objective_modes_agree(rng):
    h = PauliSum.from_texts(2, [(0.6, "ZZ"), (-0.4, "XI")])
    p = QrbmParams.random(2, 1, rng, scale=0.2)
    exact_obj = ground_state_energy_objective(h, mode="exact_trial")
    qite_obj = ground_state_energy_objective(
        h, mode="qite_trial", opts=qite.QiteOptions(n_steps=100, domain_size=3))
    assert abs(exact_obj(p) - qite_obj(p)) < 1e-3


def test_run_trace_iteration_monotonicity():
    trace = RunTrace()
    trace.append(TraceRow(0, 1.0, 0.0, 1.0, 0.0, "x"))
    with pytest.raises(ValueError):
        trace.append(TraceRow(0, 1.0, 0.0, 1.0, 0.0, "x"))


def test_run_trace_csv_deterministic(tmp_path):
    trace = RunTrace()
    trace.append(TraceRow(0, 1.5, 0.1, 2.0, 123.4, "abc"))
    trace.append(TraceRow(1, 1.2, 0.05, 2.1, 456.7, "def"))
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    trace.to_csv(p1)
    trace.to_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()
    header = p1.read_text().splitlines()[0]
    assert header == "iter,objective,residual,cond_A,elapsed_ms,theta_hash"


def test_var_ite_stationary_at_eigenstate():
    # theta = 0 gives |+>, the exact ground state of -X
    h = PauliSum.from_texts(1, [(-1.0, "X")])
    params = QrbmParams.zeros(1, 0)
    new, residual = var_ite_step(params, h, ItePath(dtau=0.05, tau_max=0.1))
    np.testing.assert_allclose(new.to_vector(), params.to_vector(), atol=1e-9)


def test_var_ite_matches_analytic_one_parameter():
    # ansatz e^{theta Z}|+> / norm against H = Z, single active parameter
    h = PauliSum.from_texts(1, [(1.0, "Z")])
    theta = 0.3
    params = QrbmParams(1, 0, b=np.array([[0.0, 0.0, theta]]),
                        m=np.zeros(0), w=np.zeros((1, 0)),
                        k=np.zeros((1, 1, 3)))
    mask = np.zeros(params.n_parameters, dtype=bool)
    mask[2] = True  # b[0, z]
    info = trainers._var_ite_step_full(params, h, ItePath(dtau=0.01, tau_max=1.0),
                                       mask=mask)
    # closed form: psi = (e^t, e^-t)/sqrt(2 cosh 2t)
    # dpsi = (e^t, -e^-t)/sqrt(2cosh2t) - tanh(2t) psi
    z = 2.0 * math.cosh(2 * theta)
    psi = np.array([math.exp(theta), math.exp(-theta)]) / math.sqrt(z)
    dpsi = np.array([math.exp(theta), -math.exp(-theta)]) / math.sqrt(z) \
        - math.tanh(2 * theta) * psi
    a_want = float(dpsi @ dpsi)
    c_want = float(-(dpsi * np.array([1.0, -1.0])) @ psi)
    assert abs(info["a_matrix"][0, 0] - a_want) < 1e-5
    assert abs(info["c_vector"][0] - c_want) < 1e-5


def test_var_ite_energy_monotone(rng):
    h = PauliSum.from_texts(
        3, [(0.7, "ZZI"), (-0.5, "XII"), (0.4, "IYZ"), (-0.3, "IIX")])
    params = QrbmParams.random(3, 0, rng, scale=0.2)
    path = ItePath(dtau=0.01, tau_max=1.0)
    energies = [sv.expectation(h, trial_state_exact(params))]
    for _ in range(5):
        params, _ = var_ite_step(params, h, path)
        energies.append(sv.expectation(h, trial_state_exact(params)))
    assert all(e2 <= e1 + 1e-9 for e1, e2 in zip(energies, energies[1:]))


def test_var_ite_first_order_in_dtau(rng):
    h = PauliSum.from_texts(2, [(0.8, "ZZ"), (-0.6, "XI")])
    params = QrbmParams.random(2, 0, rng, scale=0.3)
    rates = []
    for dtau in (0.01, 0.005):
        new, _ = var_ite_step(params, h, ItePath(dtau=dtau, tau_max=1.0))
        rates.append(np.linalg.norm(new.to_vector() - params.to_vector()) / dtau)
    assert abs(rates[0] - rates[1]) < 0.05 * max(rates)


def test_fd_tangents_richardson(rng):
    # central differences converge one order faster than one-sided ones
    h = PauliSum.from_texts(1, [(1.0, "Z")])
    params = QrbmParams(1, 0, b=np.array([[0.0, 0.0, 0.4]]),
                        m=np.zeros(0), w=np.zeros((1, 0)), k=np.zeros((1, 1, 3)))
    vec = params.to_vector()
    theta = 0.4
    z = 2.0 * math.cosh(2 * theta)
    psi = np.array([math.exp(theta), math.exp(-theta)]) / math.sqrt(z)
    dpsi = np.array([math.exp(theta), -math.exp(-theta)]) / math.sqrt(z) \
        - math.tanh(2 * theta) * psi
    errors = {}
    for fd in (1e-3, 5e-4):
        cols = trainers._tangents(params, vec, fd, None)
        errors[fd] = np.linalg.norm(cols[2].real - dpsi)
    # O(fd^2) central scheme: halving fd quarters the error
    ratio = errors[1e-3] / errors[5e-4]
    assert 3.0 < ratio < 5.0


def test_analytic_tangents_match_finite_differences(rng):
    # dual-route check: the eigendecomposition-based fast path against the
    # central-difference contract path, hidden-free and with hidden units
    for n, m in [(4, 0), (3, 2)]:
        base = "bell_pairs" if n % 2 == 0 and m == 0 else "plus_product"
        p = QrbmParams.random(n, m, rng, scale=0.4, base_state=base)
        vec = p.to_vector()
        fd = trainers._tangents(p, vec, 1e-4, None)
        an = trainers._tangents_analytic(p, vec, None)
        worst = max(np.linalg.norm(fd[i] - an[i]) for i in fd)
        assert worst < 1e-6


def test_gibbs_train_beta_zero_is_exact():
    h = PauliSum.from_texts(2, [(1.0, "ZZ"), (0.3, "XI")])
    theta0 = QrbmParams.zeros(4, 0, base_state="bell_pairs")
    params, trace, fidelity = gibbs_train(h, 0.0, theta0,
                                          ItePath(dtau=0.01, tau_max=1.0))
    assert fidelity >= 1 - 1e-12
    assert len(trace.rows) == 0


def test_gibbs_train_two_qubit_system():
    h = PauliSum.from_texts(2, [(-1.0, "XI"), (-0.7, "IX"), (0.5, "ZZ")])
    theta0 = QrbmParams.zeros(4, 0, base_state="bell_pairs")
    params, trace, fidelity = gibbs_train(h, 1.0, theta0,
                                          ItePath(dtau=0.02, tau_max=0.5))
    assert fidelity >= 0.99
    assert len(trace.rows) == 25


def test_gibbs_train_register_checks():
    h = PauliSum.from_texts(2, [(1.0, "ZZ")])
    with pytest.raises(ValueError):
        gibbs_train(h, 1.0, QrbmParams.zeros(4, 0), ItePath())
    with pytest.raises(ValueError):
        gibbs_train(h, 1.0, QrbmParams.zeros(2, 0, base_state="bell_pairs"),
                    ItePath())
