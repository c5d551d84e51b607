import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import kron_chain
from qrbm.errors import DimensionMismatchError, PauliParseError
from qrbm.pauli import (DROP_TOL, PauliString, PauliSum, format_pauli_text,
                        parse_pauli_text, pauli_mul, sum_combine, sum_multiply)

ALL_1Q = [parse_pauli_text(c) for c in "IXYZ"]
ALL_2Q = [parse_pauli_text(a + b) for a in "IXYZ" for b in "IXYZ"]


def test_single_qubit_multiplication_table():
    # full 4x4 table checked against dense 2x2 products
    for p, q in itertools.product(ALL_1Q, ALL_1Q):
        phase, r = pauli_mul(p, q)
        dense = kron_chain(str(p)) @ kron_chain(str(q))
        np.testing.assert_allclose(dense, phase * kron_chain(str(r)), atol=0)


def test_known_products():
    phase, r = pauli_mul(parse_pauli_text("X"), parse_pauli_text("X"))
    assert phase == 1 and r.is_identity
    phase, r = pauli_mul(parse_pauli_text("X"), parse_pauli_text("Y"))
    assert phase == 1j and str(r) == "Z"
    phase, r = pauli_mul(parse_pauli_text("XZ"), parse_pauli_text("YZ"))
    assert phase == 1j and str(r) == "ZI"


def test_mul_associativity_with_phases_exhaustive_2q():
    for p, q, r in itertools.product(ALL_2Q, repeat=3):
        ph1, pq = pauli_mul(p, q)
        ph2, left = pauli_mul(pq, r)
        ph3, qr = pauli_mul(q, r)
        ph4, right = pauli_mul(p, qr)
        assert left == right
        assert ph1 * ph2 == ph3 * ph4


def test_mul_involution():
    for p in ALL_2Q:
        phase, r = pauli_mul(p, p)
        assert phase == 1 and r.is_identity


def test_mul_size_mismatch():
    with pytest.raises(DimensionMismatchError):
        pauli_mul(parse_pauli_text("X"), parse_pauli_text("XX"))


def test_parse_format_round_trip():
    p = parse_pauli_text("XIZY")
    assert p.letter(0) == "X" and p.letter(1) == "I"
    assert p.letter(2) == "Z" and p.letter(3) == "Y"
    assert parse_pauli_text("IIII").is_identity
    assert format_pauli_text(parse_pauli_text("ZXZ")) == "ZXZ"


@given(st.text(alphabet="IXYZ", min_size=1, max_size=12))
def test_round_trip_property(text):
    assert format_pauli_text(parse_pauli_text(text)) == text


def test_parse_error_position():
    with pytest.raises(PauliParseError) as err:
        parse_pauli_text("XIQZ")
    assert err.value.position == 2
    with pytest.raises(PauliParseError):
        parse_pauli_text("")


def test_string_support_and_weight():
    p = parse_pauli_text("XIZY")
    assert p.support_qubits() == (0, 2, 3)
    assert p.weight() == 3
    assert PauliString.single(3, 1, "Y") == parse_pauli_text("IYI")


def test_sum_cancellation_gives_zero():
    a = PauliSum.from_texts(1, [(1.0, "Z")], identity_coeff=0.5)
    z = sum_combine(a, a, 1.0, -1.0)
    assert z.is_zero()
    assert z.identity_coeff == 0.0 and z.terms == ()


def test_sum_merges_duplicates():
    s = sum_combine(PauliSum.from_texts(1, [(2.0, "Z")]),
                    PauliSum.from_texts(1, [(3.0, "Z")]))
    assert s.n_terms == 1
    assert s.coefficient(parse_pauli_text("Z")) == 5.0


def test_sum_with_identity_merge():
    a = PauliSum.from_texts(1, [(1.0, "X"), (1.0, "I")])
    s = sum_combine(a, a, 1.0, 1.0)
    assert s.identity_coeff == 2.0
    assert s.coefficient(parse_pauli_text("X")) == 2.0


def test_sum_drop_tolerance():
    big = PauliSum.from_texts(1, [(1.0, "X")])
    tiny = PauliSum.from_texts(1, [(1e-16, "Z")])
    s = sum_combine(big, tiny)
    assert s.n_terms == 1  # the Z term falls below DROP_TOL relative to 1.0
    alone = PauliSum.from_texts(1, [(1e-16, "Z")])
    assert alone.n_terms == 1  # nothing to be relative to, kept


def test_sum_size_mismatch():
    with pytest.raises(DimensionMismatchError):
        sum_combine(PauliSum.zero(1), PauliSum.zero(2))


@given(st.lists(st.tuples(st.sampled_from(["II", "XY", "ZZ", "YI", "IX"]),
                          st.floats(-5, 5, allow_nan=False)), max_size=6),
       st.floats(-3, 3, allow_nan=False), st.floats(-3, 3, allow_nan=False))
def test_hermiticity_preserved_by_real_combinations(entries, alpha, beta):
    a = PauliSum.from_texts(2, [(c, t) for t, c in entries])
    b = PauliSum.from_texts(2, [(2 * c, t) for t, c in entries[::-1]])
    assert a.is_hermitian and b.is_hermitian
    assert sum_combine(a, b, alpha, beta).is_hermitian


def test_complex_coefficient_flips_hermitian_predicate():
    s = PauliSum.from_texts(1, [(1.0 + 0.5j, "X")])
    assert not s.is_hermitian
    # exact-zero imaginary parts are demoted to floats
    s2 = PauliSum.from_texts(1, [(complex(1.0, 0.0), "X")])
    assert s2.is_hermitian


def test_sum_multiply_against_dense(rng):
    a = PauliSum.from_texts(2, [(0.7, "XY"), (-0.2, "ZI")], identity_coeff=0.3)
    b = PauliSum.from_texts(2, [(1.1, "YY"), (0.4, "IZ")], identity_coeff=-1.0)
    prod = sum_multiply(a, b)
    dense_a = 0.3 * np.eye(4) + 0.7 * kron_chain("XY") - 0.2 * kron_chain("ZI")
    dense_b = -1.0 * np.eye(4) + 1.1 * kron_chain("YY") + 0.4 * kron_chain("IZ")
    dense_prod = np.zeros((4, 4), dtype=complex)
    dense_prod += complex(prod.identity_coeff) * np.eye(4)
    for c, t in prod.terms:
        dense_prod += c * kron_chain(str(t))
    np.testing.assert_allclose(dense_prod, dense_a @ dense_b, atol=1e-12)


def test_sum_equality_is_order_insensitive():
    a = PauliSum.from_texts(2, [(1.0, "XI"), (2.0, "IZ")])
    b = PauliSum.from_texts(2, [(2.0, "IZ"), (1.0, "XI")])
    assert a == b
    assert a != PauliSum.from_texts(2, [(1.0, "XI")])


def test_scaled():
    s = PauliSum.from_texts(1, [(2.0, "X")], identity_coeff=1.0).scaled(-0.5)
    assert s.identity_coeff == -0.5
    assert s.coefficient(parse_pauli_text("X")) == -1.0
