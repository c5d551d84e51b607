from pathlib import Path

import numpy as np
import pytest

from qrbm import exact
from qrbm.errors import PauliParseError
from qrbm.hamiltonians import (HaldaneSpec, haldane_chain, load_pauli_sum,
                               save_pauli_sum)
from qrbm.pauli import parse_pauli_text

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def test_haldane_minimal_chain():
    h = haldane_chain(HaldaneSpec(n_sites=3, j=1.0, h1=0.0, h2=0.0))
    assert h.n_terms == 1
    assert h.coefficient(parse_pauli_text("ZXZ")) == -1.0


def test_haldane_term_counts_n9():
    h = haldane_chain(HaldaneSpec(n_sites=9, j=1.0, h1=0.48, h2=0.0))
    weights = sorted(t.weight() for _, t in h.terms)
    assert weights.count(3) == 7  # ZXZ bulk terms
    assert weights.count(1) == 9  # transverse field
    assert h.n_terms == 16


def test_haldane_term_counts_n4_all_couplings():
    h = haldane_chain(HaldaneSpec(n_sites=4, j=0.7, h1=0.2, h2=0.1))
    assert h.n_terms == 2 + 4 + 3
    assert h.coefficient(parse_pauli_text("XXII")) == -0.1
    assert h.coefficient(parse_pauli_text("IZXZ")) == -0.7
    assert h.is_hermitian
    assert h.identity_coeff == 0.0  # traceless


def test_haldane_requires_three_sites():
    with pytest.raises(ValueError):
        HaldaneSpec(n_sites=2)


def test_open_boundaries_no_wraparound():
    h = haldane_chain(HaldaneSpec(n_sites=4, j=1.0, h1=0.0, h2=1.0))
    assert h.coefficient(parse_pauli_text("XIIX")) == 0.0


def test_load_simple_file(tmp_path):
    f = tmp_path / "h.txt"
    f.write_text("qubits 2\n1.0 ZZ\n-0.5 XI\n")
    h = load_pauli_sum(f)
    assert h.n_qubits == 2 and h.n_terms == 2
    assert h.coefficient(parse_pauli_text("ZZ")) == 1.0
    assert h.coefficient(parse_pauli_text("XI")) == -0.5


def test_empty_file_rejected_without_header(tmp_path):
    f = tmp_path / "empty.txt"
    f.write_text("")
    with pytest.raises(PauliParseError):
        load_pauli_sum(f)
    f.write_text("qubits 3\n")
    assert load_pauli_sum(f).is_zero()


def test_parse_error_carries_line_number(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("qubits 2\n1.0 ZZ\n1+2j XI\n")
    with pytest.raises(PauliParseError) as err:
        load_pauli_sum(f)
    assert "line 3" in str(err.value)


def test_wrong_width_rejected(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("qubits 2\n1.0 ZZZ\n")
    with pytest.raises(PauliParseError):
        load_pauli_sum(f)


def test_round_trip_byte_identical(tmp_path):
    h = haldane_chain(HaldaneSpec(n_sites=5, j=1.0, h1=0.48, h2=0.3))
    p1 = tmp_path / "a.txt"
    p2 = tmp_path / "b.txt"
    save_pauli_sum(h, p1)
    reloaded = load_pauli_sum(p1)
    assert reloaded == h
    save_pauli_sum(reloaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_identity_line_round_trip(tmp_path):
    f = tmp_path / "h.txt"
    f.write_text("qubits 2\n0.25 II\n1.0 XX\n")
    h = load_pauli_sum(f)
    assert h.identity_coeff == 0.25
    out = tmp_path / "out.txt"
    save_pauli_sum(h, out)
    assert load_pauli_sum(out) == h


def test_comments_and_blank_lines(tmp_path):
    f = tmp_path / "h.txt"
    f.write_text("# header comment\n\nqubits 1\n0.5 Z  # trailing comment\n")
    h = load_pauli_sum(f)
    assert h.coefficient(parse_pauli_text("Z")) == 0.5


def test_shipped_h2_file_loads_and_is_sane():
    h = load_pauli_sum(DATA_DIR / "h2_sto3g_0735.txt")
    assert h.n_qubits == 2
    assert h.is_hermitian
    rep = exact.eigh(h)
    # electronic ground energy in hartree: negative, below the identity shift
    assert rep.ground_energy < -1.5
    assert rep.gap > 0.1
