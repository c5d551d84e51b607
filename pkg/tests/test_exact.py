import math

import numpy as np
import pytest
import scipy.linalg

from conftest import dense_from_entries, random_statevector
from qrbm import exact
from qrbm.errors import (CapacityError, HermiticityError, SelfEnergyPoleError,
                         SpectrumPartitionError)
from qrbm.pauli import PauliSum
from qrbm.statevec import StateVector


def test_to_dense_single_z():
    h = PauliSum.from_texts(1, [(1.0, "Z")])
    np.testing.assert_allclose(exact.to_dense(h), np.diag([1.0, -1.0]), atol=0)


def test_to_dense_xx_antidiagonal():
    h = PauliSum.from_texts(2, [(1.0, "XX")])
    want = np.zeros((4, 4))
    want[::-1].flat[::5] = 1.0  # anti-diagonal ones
    np.testing.assert_allclose(exact.to_dense(h), np.fliplr(np.eye(4)), atol=0)


def test_to_dense_matches_independent_oracle(rng):
    entries = [(0.7, "XYZ"), (-0.3, "ZIZ"), (1.1, "IYX")]
    h = PauliSum.from_texts(3, entries, identity_coeff=0.25)
    np.testing.assert_allclose(exact.to_dense(h),
                               dense_from_entries(entries, 3, identity=0.25),
                               atol=1e-14)


def test_to_dense_capacity_error():
    with pytest.raises(CapacityError):
        exact.to_dense(PauliSum.zero(15))


def test_haldane_trace_zero():
    from qrbm.hamiltonians import HaldaneSpec, haldane_chain
    h = haldane_chain(HaldaneSpec(n_sites=3, j=1.0, h1=0.5, h2=0.2))
    assert abs(np.trace(exact.to_dense(h))) < 1e-12


def test_eigh_single_z():
    rep = exact.eigh(PauliSum.from_texts(1, [(1.0, "Z")]))
    np.testing.assert_allclose(rep.eigenvalues, [-1.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(np.abs(rep.ground_state.amplitudes), [0.0, 1.0],
                               atol=1e-14)
    assert abs(rep.gap - 2.0) < 1e-14
    assert not rep.degeneracy_flag


def test_eigh_minus_x_ground_is_plus():
    rep = exact.eigh(PauliSum.from_texts(1, [(-1.0, "X")]))
    assert abs(rep.ground_energy + 1.0) < 1e-14
    amps = rep.ground_state.amplitudes
    phase = amps[0] / abs(amps[0])
    np.testing.assert_allclose(amps / phase,
                               [1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-12)


def test_eigh_haldane_vs_independent_solver():
    from qrbm.hamiltonians import HaldaneSpec, haldane_chain
    h = haldane_chain(HaldaneSpec(n_sites=5, j=1.0, h1=0.48, h2=0.0))
    rep = exact.eigh(h)
    dense = exact.to_dense(h)
    want = scipy.linalg.eigh(dense, eigvals_only=True)  # independent LAPACK path
    np.testing.assert_allclose(rep.eigenvalues, want, atol=1e-9)
    # residual contract
    for k in [0, 3, 17]:
        v = rep.eigenvectors[:, k]
        res = np.linalg.norm(dense @ v - rep.eigenvalues[k] * v)
        assert res <= 1e-9 * np.abs(rep.eigenvalues).max()


def test_eigh_trace_identity(rng):
    entries = [(0.9, "XZI"), (-0.4, "YYI"), (0.3, "IZZ")]
    h = PauliSum.from_texts(3, entries, identity_coeff=0.7)
    rep = exact.eigh(h)
    assert abs(rep.eigenvalues.sum() - 0.7 * 8) < 1e-8


def test_eigh_degeneracy_flag():
    rep = exact.eigh(PauliSum.from_texts(2, [(1.0, "ZZ")]))
    assert rep.degeneracy_flag  # two -1 eigenvalues


def test_gibbs_beta_zero_is_maximally_mixed():
    h = PauliSum.from_texts(2, [(0.8, "ZZ"), (0.3, "XI")])
    rho = exact.gibbs_state(h, 0.0)
    np.testing.assert_allclose(rho, np.eye(4) / 4, atol=1e-14)


def test_gibbs_single_z_analytic():
    rho = exact.gibbs_state(PauliSum.from_texts(1, [(1.0, "Z")]), 1.0)
    z = math.exp(-1.0) + math.exp(1.0)
    np.testing.assert_allclose(rho, np.diag([math.exp(-1.0), math.exp(1.0)]) / z,
                               atol=1e-12)


def test_gibbs_commutes_and_traces(rng):
    entries = [(0.6, "XYI"), (0.2, "ZZI"), (-0.9, "IIZ")]
    h = PauliSum.from_texts(3, entries)
    rho = exact.gibbs_state(h, 0.7)
    assert abs(np.trace(rho).real - 1.0) < 1e-10
    vals = np.linalg.eigvalsh(rho)
    assert vals.min() > -1e-12
    dense = dense_from_entries(entries, 3)
    comm = rho @ dense - dense @ rho
    assert np.linalg.norm(comm) <= 1e-9 * np.linalg.norm(dense)


def test_purification_partial_trace(rng):
    entries = [(0.5, "XYZ"), (-0.7, "ZZI"), (0.3, "IXI")]
    h = PauliSum.from_texts(3, entries)
    beta = 1.3
    psi = exact.gibbs_purification(h, beta)
    assert psi.n_qubits == 6
    # independent partial trace over the second register (qubits 3..5)
    m = psi.amplitudes.reshape(8, 8, order="F")  # m[x, y] with y the ancilla label
    rho_got = m @ m.conj().T
    rho_want = exact.gibbs_state(h, beta)
    np.testing.assert_allclose(rho_got, rho_want, atol=1e-9)


def test_matrix_exp_shift_max():
    h = PauliSum.from_texts(1, [(300.0, "Z")])
    shifted = exact.matrix_exp(h, shift_max=True)
    np.testing.assert_allclose(shifted, np.diag([1.0, 0.0]), atol=1e-200)


def test_self_energy_uncoupled_equals_low_block():
    # block-diagonal across the split: no cross-coupling between low and high
    h = PauliSum.from_texts(2, [(0.3, "ZI"), (5.0, "IZ")], identity_coeff=5.0)
    # spectrum: 0.3*z0 + 5*z1 + 5 -> {9.7, 10.3} (z1=+1) and {-0.3, 0.3} (z1=-1)
    rep = exact.self_energy(h, z=2.0, lambda_c=5.0)
    np.testing.assert_allclose(rep.sigma, np.diag(rep.low_eigenvalues), atol=1e-10)

    # same conclusion when the split comes from an uncoupled reference
    split = PauliSum.from_texts(2, [(5.0, "IZ")], identity_coeff=5.0)
    rep2 = exact.self_energy(h, z=2.0, lambda_c=5.0, split=split)
    low = exact.project_low(h, rep2)
    np.testing.assert_allclose(rep2.sigma, low, atol=1e-10)


def test_self_energy_second_order_in_coupling():
    # H = H0 + eps*V with V coupling the split blocks: deviation is O(eps^2)
    h0 = PauliSum.from_texts(2, [(0.4, "ZI"), (6.0, "IZ")], identity_coeff=6.0)
    coupling = PauliSum.from_texts(2, [(1.0, "XX")])
    devs = []
    for eps in (1e-2, 5e-3):
        h = h0 + coupling.scaled(eps)
        rep = exact.self_energy(h, z=0.1, lambda_c=6.0, split=h0)
        low = exact.project_low(h, rep)
        devs.append(np.linalg.norm(rep.sigma - low, 2))
    order = math.log(devs[0] / devs[1]) / math.log(2.0)
    assert 1.8 < order < 2.2


def test_self_energy_errors():
    h = PauliSum.from_texts(1, [(1.0, "Z")])
    with pytest.raises(SelfEnergyPoleError):
        exact.self_energy(h, z=1.0, lambda_c=0.0)
    with pytest.raises(SpectrumPartitionError):
        exact.self_energy(h, z=0.0, lambda_c=-5.0)
    with pytest.raises(HermiticityError):
        exact.self_energy(PauliSum.from_texts(1, [(1j, "X")]), z=0.0, lambda_c=0.0)
