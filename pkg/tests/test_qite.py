import math

import numpy as np
import pytest
import scipy.linalg

from conftest import dense_from_entries, random_statevector
from qrbm import qite, statevec as sv
from qrbm.errors import HermiticityError, UnsupportedLocalityError
from qrbm.hamiltonians import HaldaneSpec, haldane_chain
from qrbm.pauli import PauliSum, parse_pauli_text


def single_term(n, coeff, text):
    return PauliSum.from_texts(n, [(coeff, text)])


def test_trotter_terms_order_and_reconstruction():
    h = PauliSum.from_texts(3, [(0.5, "XII"), (-1.2, "IZZ")])
    terms = qite.trotter_terms(h)
    assert len(terms) == 2
    assert terms[0].coefficient(parse_pauli_text("XII")) == 0.5
    assert terms[1].coefficient(parse_pauli_text("IZZ")) == -1.2
    total = terms[0] + terms[1]
    assert total == h


def test_trotter_terms_zero_and_locality_cap():
    assert qite.trotter_terms(PauliSum.zero(2)) == []
    haldane = haldane_chain(HaldaneSpec(n_sites=3, j=1.0, h1=0.0, h2=0.0))
    with pytest.raises(UnsupportedLocalityError):
        qite.trotter_terms(haldane, max_locality=2)
    assert len(qite.trotter_terms(haldane, max_locality=3)) == 1
    with pytest.raises(HermiticityError):
        qite.trotter_terms(PauliSum.from_texts(1, [(1j, "X")]))


def test_linear_system_diagonal_ones():
    psi = sv.from_amplitudes(random_statevector(3, np.random.default_rng(3)))
    h = single_term(3, 0.7, "IZZ")
    s, b, c = qite.build_linear_system(psi, h, 0.02, (1, 2))
    np.testing.assert_allclose(np.diag(s), np.ones(16), atol=1e-12)


def test_linear_system_zero_term():
    psi = sv.plus_state(2)
    s, b, c = qite.build_linear_system(psi, PauliSum.zero(2), 0.1, (0,))
    np.testing.assert_allclose(b, 0.0, atol=0)
    assert c == 1.0


def test_linear_system_hand_computed_entries():
    # h = Z on |+>: <sigma_i Z> over the 1-qubit basis (I, X, Y, Z)
    psi = sv.plus_state(1)
    h = single_term(1, 1.0, "Z")
    inv_n = 0.1
    s, b, c = qite.build_linear_system(psi, h, inv_n, (0,))
    # c = ||e^{Z/10}|+>||^2 = (e^{0.2} + e^{-0.2}) / 2
    assert abs(c - (math.exp(0.2) + math.exp(-0.2)) / 2) < 1e-12
    root = 1 / math.sqrt(c)
    # <+|IZ|+> = 0, <+|XZ|+> = <+|(-iY)|+> = 0, <+|YZ|+> = <+|iX|+> = i, <+|ZZ|+> = 1
    want_b = -1j * root * np.array([0.0, 0.0, 1j, 1.0])
    np.testing.assert_allclose(b, want_b, atol=1e-12)


def test_qite_step_zero_term_is_identity():
    psi = sv.plus_state(2)
    out, record = qite.qite_step(psi, PauliSum.zero(2), qite.QiteOptions(n_steps=10))
    np.testing.assert_allclose(out.amplitudes, psi.amplitudes)
    assert record.residual == 0.0


def test_qite_step_single_qubit_accuracy():
    psi = sv.plus_state(1)
    h = single_term(1, 1.0, "Z")
    out, record = qite.qite_step(psi, h, qite.QiteOptions(n_steps=100))
    exact_state = sv.normalize(sv.apply_exp_real(0.01, parse_pauli_text("Z"), psi))
    assert sv.fidelity(out, exact_state) >= 1 - 1e-3
    assert record.fidelity_vs_exact >= 1 - 1e-3
    assert abs(out.norm() - 1.0) < 1e-12


def test_qite_step_error_order():
    # halving the step must shrink the single-step infidelity at least at
    # second order (the full-domain solve actually lands near sixth order)
    psi = sv.plus_state(2)
    infids = []
    for n in (50, 100):
        h = single_term(2, 1.0, "ZZ")
        out, _ = qite.qite_step(psi, h, qite.QiteOptions(n_steps=n))
        exact_state = sv.normalize(
            sv.apply_exp_real(1.0 / n, parse_pauli_text("ZZ"), psi))
        infids.append(1.0 - sv.fidelity(out, exact_state))
    ratio = infids[0] / infids[1]
    assert ratio >= 4.0


def test_qite_evolve_zero_time():
    psi = sv.plus_state(2)
    h = PauliSum.from_texts(2, [(0.4, "XI")])
    result = qite.qite_evolve(psi, h, 0.0, qite.QiteOptions(n_steps=5))
    assert result.state is psi
    assert result.fidelity_vs_exact == 1.0


def test_qite_evolve_two_term_hamiltonian():
    h = PauliSum.from_texts(2, [(-1.0, "XI"), (-1.0, "IZ")])
    psi = sv.plus_state(2)
    result = qite.qite_evolve(psi, h, 2.0, qite.QiteOptions(n_steps=100))
    assert result.fidelity_vs_exact >= 0.999
    assert len(result.records) == 200


def test_qite_evolve_commuting_terms_high_fidelity():
    h = PauliSum.from_texts(2, [(0.6, "ZI"), (-0.4, "IZ"), (0.3, "ZZ")])
    psi = sv.plus_state(2)
    result = qite.qite_evolve(psi, h, 1.0,
                              qite.QiteOptions(n_steps=100, domain_size=2))
    # commuting terms leave no Trotter error, only the per-step unitary residue
    assert result.fidelity_vs_exact >= 1 - 1e-8
    assert all(r.fidelity_vs_exact > 1 - 1e-6 for r in result.records)


def test_qite_evolve_matches_dense_oracle(rng):
    entries = [(0.5, "XY"), (-0.3, "ZI")]
    h = PauliSum.from_texts(2, entries)
    psi = sv.from_amplitudes(random_statevector(2, rng))
    result = qite.qite_evolve(psi, h, 1.0,
                              qite.QiteOptions(n_steps=150, domain_size=2))
    dense = dense_from_entries(entries, 2)
    want = scipy.linalg.expm(dense) @ psi.amplitudes
    want = want / np.linalg.norm(want)
    overlap = abs(np.vdot(want, result.state.amplitudes)) ** 2
    assert overlap >= 0.999
    assert abs(result.fidelity_vs_exact - overlap) < 1e-12


def test_trotter_order_of_total_evolution():
    # measured exponent of the total infidelity between n=50 and n=200
    h = PauliSum.from_texts(2, [(0.7, "XI"), (0.5, "ZZ"), (-0.4, "IY")])
    psi = sv.plus_state(2)
    infids = {}
    for n in (50, 200):
        result = qite.qite_evolve(psi, h, 1.0,
                                  qite.QiteOptions(n_steps=n, domain_size=2))
        infids[n] = 1.0 - result.fidelity_vs_exact
    exponent = math.log(infids[50] / infids[200]) / math.log(4.0)
    assert 1.6 <= exponent <= 2.4


def test_residual_weakly_decreases_with_domain(rng):
    psi = sv.from_amplitudes(random_statevector(3, rng))
    h = single_term(3, 0.8, "ZZI")
    residuals = []
    for size in (2, 3):
        _, record = qite.qite_step(psi, h, qite.QiteOptions(
            n_steps=50, domain_size=size))
        residuals.append(record.residual)
    assert residuals[1] <= residuals[0] + 1e-12


def test_shot_noise_deterministic_and_converging():
    psi = sv.plus_state(1)
    h = single_term(1, 1.0, "Z")
    opts = qite.QiteOptions(n_steps=50, shot_noise=2000, rng_seed=5)
    out1, rec1 = qite.qite_step(psi, h, opts)
    out2, rec2 = qite.qite_step(psi, h, opts)
    np.testing.assert_array_equal(out1.amplitudes, out2.amplitudes)
    # noisy solve still lands near the noiseless one
    _, clean = qite.qite_step(psi, h, qite.QiteOptions(n_steps=50))
    assert np.linalg.norm(rec1.a_coeffs - clean.a_coeffs) < 0.2


def test_noiseless_results_bit_stable():
    psi = sv.plus_state(2)
    h = single_term(2, -0.6, "XY")
    opts = qite.QiteOptions(n_steps=30)
    out1, _ = qite.qite_step(psi, h, opts)
    out2, _ = qite.qite_step(psi, h, opts)
    np.testing.assert_array_equal(out1.amplitudes, out2.amplitudes)


def test_first_order_c_reported():
    psi = sv.plus_state(1)
    h = single_term(1, 0.5, "X")
    _, record = qite.qite_step(psi, h, qite.QiteOptions(n_steps=20))
    # <+|X|+> = 1 so the printed first-order form gives 1 - 2*(0.5/20)
    assert abs(record.c_first_order - (1 - 2 * 0.5 / 20)) < 1e-12
    assert record.c_norm > 1.0  # amplifying step: exact norm grows
