"""Built-in spin-chain constructors and the Pauli-sum text file format.

File format::

    # optional comments
    qubits <n>
    <coeff> <pauli-text>
    ...

Coefficients are plain real literals; the saver emits repr() so a save/load
round trip is byte identical for canonical files.  Complex coefficients are
rejected on load (operators in files must be Hermitian).
"""

from dataclasses import dataclass
from pathlib import Path

from .errors import PauliParseError
from .pauli import PauliString, PauliSum, format_pauli_text, parse_pauli_text


@dataclass(frozen=True)
class HaldaneSpec:
    """Open-boundary spin-1/2 chain couplings."""

    n_sites: int
    j: float = 1.0
    h1: float = 0.0
    h2: float = 0.0

    def __post_init__(self):
        if self.n_sites < 3:
            raise ValueError("the chain needs at least 3 sites")


def haldane_chain(spec: HaldaneSpec) -> PauliSum:
    """-J sum Z_i X_{i+1} Z_{i+2} - h1 sum X_i - h2 sum X_i X_{i+1}."""
    n = spec.n_sites
    terms = []
    for i in range(n - 2):
        terms.append((-spec.j, PauliString.from_letters(
            n, {i: "Z", i + 1: "X", i + 2: "Z"})))
    for i in range(n):
        terms.append((-spec.h1, PauliString.single(n, i, "X")))
    for i in range(n - 1):
        terms.append((-spec.h2, PauliString.from_letters(n, {i: "X", i + 1: "X"})))
    return PauliSum(n, terms)


def load_pauli_sum(path) -> PauliSum:
    """Parse a Pauli-sum file; raises PauliParseError with the line number."""
    text = Path(path).read_text()
    n_qubits = None
    entries = []
    identity = 0.0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n_qubits is None:
            fields = line.split()
            if len(fields) != 2 or fields[0] != "qubits":
                raise PauliParseError(
                    f"line {lineno}: expected 'qubits <n>' header, got {raw!r}")
            try:
                n_qubits = int(fields[1])
            except ValueError:
                raise PauliParseError(f"line {lineno}: bad qubit count {fields[1]!r}")
            if n_qubits < 1:
                raise PauliParseError(f"line {lineno}: qubit count must be >= 1")
            continue
        fields = line.split()
        if len(fields) != 2:
            raise PauliParseError(
                f"line {lineno}: expected '<coeff> <paulis>', got {raw!r}")
        try:
            coeff = float(fields[0])
        except ValueError:
            raise PauliParseError(
                f"line {lineno}: coefficient {fields[0]!r} is not a real number"
                " (complex coefficients are rejected)")
        try:
            ps = parse_pauli_text(fields[1])
        except PauliParseError as err:
            raise PauliParseError(f"line {lineno}: {err}")
        if ps.n_qubits != n_qubits:
            raise PauliParseError(
                f"line {lineno}: string on {ps.n_qubits} qubits in a"
                f" {n_qubits}-qubit file")
        if ps.is_identity:
            identity += coeff
        else:
            entries.append((coeff, ps))
    if n_qubits is None:
        raise PauliParseError("missing 'qubits <n>' header")
    return PauliSum(n_qubits, entries, identity_coeff=identity, drop_tol=0.0)


def save_pauli_sum(h: PauliSum, path) -> None:
    """Write the canonical text form (byte-stable under save/load/save)."""
    if not h.is_hermitian:
        raise ValueError("only Hermitian sums (real coefficients) can be saved")
    lines = [f"qubits {h.n_qubits}"]
    if h.identity_coeff != 0.0:
        lines.append(f"{h.identity_coeff!r} {'I' * h.n_qubits}")
    for coeff, term in h.terms:
        lines.append(f"{coeff!r} {format_pauli_text(term)}")
    Path(path).write_text("\n".join(lines) + "\n")
