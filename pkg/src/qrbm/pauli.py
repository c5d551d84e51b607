"""Phase-exact Pauli-string algebra and real-weighted Pauli-sum containers.

Conventions used throughout the package:

* qubit q is the q-th lowest bit of the (x_mask, z_mask) pair and the q-th
  character, left to right, of the text form ``[IXYZ]+``;
* Y on qubit q means both mask bits are set, identity means both are clear;
* phases are tracked as integer powers of i and exposed as exact values
  from {1, i, -1, -i} -- no floating-point phase arithmetic anywhere.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DimensionMismatchError, PauliParseError

PAULI_CHARS = "IXYZ"
# (x bit, z bit) per letter
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
# i**k for k = 0..3, exact in binary floating point
PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)

#: relative magnitude below which merged coefficients are dropped
DROP_TOL = 1e-14


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis encoded as two bit masks."""

    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError(f"negative qubit count {self.n_qubits}")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError("mask has bits at positions >= n_qubits")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        """One non-identity letter on `qubit`, identity elsewhere."""
        if not 0 <= qubit < n_qubits:
            raise ValueError(f"qubit {qubit} outside [0, {n_qubits})")
        xb, zb = _LETTER_BITS[letter]
        return cls(n_qubits, xb << qubit, zb << qubit)

    @classmethod
    def from_letters(cls, n_qubits: int, letters: dict[int, str]) -> "PauliString":
        x = z = 0
        for qubit, letter in letters.items():
            if not 0 <= qubit < n_qubits:
                raise ValueError(f"qubit {qubit} outside [0, {n_qubits})")
            xb, zb = _LETTER_BITS[letter]
            x |= xb << qubit
            z |= zb << qubit
        return cls(n_qubits, x, z)

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def support(self) -> int:
        """Bit mask of qubits carrying a non-identity letter."""
        return self.x_mask | self.z_mask

    def support_qubits(self) -> tuple[int, ...]:
        return tuple(q for q in range(self.n_qubits) if (self.support() >> q) & 1)

    def weight(self) -> int:
        return self.support().bit_count()

    def letter(self, qubit: int) -> str:
        xb = (self.x_mask >> qubit) & 1
        zb = (self.z_mask >> qubit) & 1
        return "IXZY"[xb + 2 * zb]

    def __str__(self) -> str:
        return format_pauli_text(self)


def parse_pauli_text(text: str) -> PauliString:
    """Parse ``[IXYZ]+`` with qubit 0 leftmost."""
    if not text:
        raise PauliParseError("empty Pauli text", position=0)
    x = z = 0
    for pos, ch in enumerate(text):
        bits = _LETTER_BITS.get(ch)
        if bits is None:
            raise PauliParseError(f"illegal character {ch!r}", position=pos)
        x |= bits[0] << pos
        z |= bits[1] << pos
    return PauliString(len(text), x, z)


def format_pauli_text(p: PauliString) -> str:
    letters = []
    for q in range(p.n_qubits):
        xb = (p.x_mask >> q) & 1
        zb = (p.z_mask >> q) & 1
        letters.append("IXZY"[xb + 2 * zb])
    return "".join(letters)


def pauli_mul(p: PauliString, q: PauliString) -> tuple[complex, PauliString]:
    """Exact operator product p*q -> (phase, string), phase in {1, i, -1, -i}.

    Uses the decomposition P = i^{|x&z|} X^x Z^z; commuting Z^z1 past X^x2
    contributes (-1)^{|z1&x2|}.
    """
    if p.n_qubits != q.n_qubits:
        raise DimensionMismatchError(
            f"cannot multiply strings on {p.n_qubits} and {q.n_qubits} qubits")
    x = p.x_mask ^ q.x_mask
    z = p.z_mask ^ q.z_mask
    k = (
        (p.x_mask & p.z_mask).bit_count()
        + (q.x_mask & q.z_mask).bit_count()
        + 2 * (p.z_mask & q.x_mask).bit_count()
        - (x & z).bit_count()
    ) % 4
    return PHASES[k], PauliString(p.n_qubits, x, z)


def _coerce_real(c):
    """Demote complex coefficients with exactly zero imaginary part to float."""
    if isinstance(c, complex):
        return c.real if c.imag == 0.0 else c
    return float(c)


class PauliSum:
    """Weighted sum of Pauli strings with an explicit identity coefficient.

    Terms never contain the identity string and never contain duplicates;
    construction merges duplicates (first-seen order is preserved) and drops
    coefficients whose magnitude falls below `drop_tol` relative to the
    largest coefficient in the merged sum.
    """

    __slots__ = ("n_qubits", "identity_coeff", "terms")

    def __init__(self, n_qubits: int, terms: Iterable = (), identity_coeff=0.0,
                 drop_tol: float = DROP_TOL):
        acc: dict[tuple[int, int], complex] = {}
        order: list[tuple[int, int]] = []
        strings: dict[tuple[int, int], PauliString] = {}
        ident = complex(identity_coeff)
        for coeff, ps in terms:
            if ps.n_qubits != n_qubits:
                raise DimensionMismatchError(
                    f"term on {ps.n_qubits} qubits in a {n_qubits}-qubit sum")
            if ps.is_identity:
                ident += complex(coeff)
                continue
            key = (ps.x_mask, ps.z_mask)
            if key in acc:
                acc[key] += complex(coeff)
            else:
                acc[key] = complex(coeff)
                order.append(key)
                strings[key] = ps
        scale = max([abs(ident)] + [abs(c) for c in acc.values()], default=0.0)
        cut = drop_tol * scale
        kept = tuple(
            (_coerce_real(acc[key]), strings[key])
            for key in order
            if abs(acc[key]) > cut and acc[key] != 0.0
        )
        if abs(ident) <= cut:
            ident = 0.0
        object.__setattr__(self, "n_qubits", n_qubits)
        object.__setattr__(self, "identity_coeff", _coerce_real(ident))
        object.__setattr__(self, "terms", kept)

    def __setattr__(self, name, value):
        raise AttributeError("PauliSum is immutable")

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    @classmethod
    def from_texts(cls, n_qubits: int, entries: Sequence[tuple[float, str]],
                   identity_coeff=0.0) -> "PauliSum":
        return cls(n_qubits,
                   [(c, parse_pauli_text(t)) for c, t in entries],
                   identity_coeff=identity_coeff)

    @property
    def is_hermitian(self) -> bool:
        """True iff every coefficient (identity included) is real."""
        if isinstance(self.identity_coeff, complex):
            return False
        return all(not isinstance(c, complex) for c, _ in self.terms)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return self.identity_coeff == 0.0 and not self.terms

    def coefficient(self, ps: PauliString) -> complex:
        if ps.is_identity:
            return self.identity_coeff
        for c, t in self.terms:
            if t.x_mask == ps.x_mask and t.z_mask == ps.z_mask:
                return c
        return 0.0

    def max_locality(self) -> int:
        return max((t.weight() for _, t in self.terms), default=0)

    def scaled(self, factor) -> "PauliSum":
        return PauliSum(self.n_qubits,
                        [(factor * c, t) for c, t in self.terms],
                        identity_coeff=factor * self.identity_coeff,
                        drop_tol=0.0)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return sum_combine(self, other, 1.0, 1.0)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return sum_combine(self, other, 1.0, -1.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        if self.n_qubits != other.n_qubits:
            return False
        if self.identity_coeff != other.identity_coeff:
            return False
        mine = {(t.x_mask, t.z_mask): c for c, t in self.terms}
        theirs = {(t.x_mask, t.z_mask): c for c, t in other.terms}
        return mine == theirs

    def __hash__(self):
        return hash((self.n_qubits, self.identity_coeff,
                     frozenset((t.x_mask, t.z_mask, c) for c, t in self.terms)))

    def __repr__(self) -> str:
        parts = []
        if self.identity_coeff != 0.0 or not self.terms:
            parts.append(f"{self.identity_coeff}*{'I' * max(self.n_qubits, 1)}")
        parts.extend(f"{c}*{format_pauli_text(t)}" for c, t in self.terms)
        return f"PauliSum({' + '.join(parts)})"


def sum_combine(a: PauliSum, b: PauliSum, alpha=1.0, beta=1.0,
                drop_tol: float = DROP_TOL) -> PauliSum:
    """Return alpha*a + beta*b with duplicate strings merged."""
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatchError(
            f"cannot combine sums on {a.n_qubits} and {b.n_qubits} qubits")
    terms = [(alpha * c, t) for c, t in a.terms]
    terms += [(beta * c, t) for c, t in b.terms]
    return PauliSum(a.n_qubits, terms,
                    identity_coeff=alpha * a.identity_coeff + beta * b.identity_coeff,
                    drop_tol=drop_tol)


def sum_multiply(a: PauliSum, b: PauliSum, drop_tol: float = DROP_TOL) -> PauliSum:
    """Exact operator product of two sums (phases folded into coefficients)."""
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatchError(
            f"cannot multiply sums on {a.n_qubits} and {b.n_qubits} qubits")
    ident = PauliString.identity(a.n_qubits)
    left = list(a.terms) + ([(a.identity_coeff, ident)] if a.identity_coeff != 0.0 else [])
    right = list(b.terms) + ([(b.identity_coeff, ident)] if b.identity_coeff != 0.0 else [])
    products = []
    for ca, ta in left:
        for cb, tb in right:
            phase, ts = pauli_mul(ta, tb)
            products.append((phase * ca * cb, ts))
    return PauliSum(a.n_qubits, products, drop_tol=drop_tol)
