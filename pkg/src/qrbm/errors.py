"""Exception types shared across the package.

Every error raised on a violated contract derives from QrbmError so callers
(and the CLI exit-code mapping) can distinguish configuration problems,
capacity limits and numerical failures.
"""


class QrbmError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(QrbmError, ValueError):
    """Operands act on different qubit counts."""


class PauliParseError(QrbmError, ValueError):
    """Malformed Pauli text; carries the offending position."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message if position is None else f"{message} (position {position})")
        self.position = position


class HermiticityError(QrbmError, ValueError):
    """An operation required a Hermitian operator and got a non-Hermitian one."""


class CapacityError(QrbmError, RuntimeError):
    """Requested size exceeds a documented dense/statevector bound."""


class PostselectionImpossibleError(QrbmError, ArithmeticError):
    """Post-selection probability underflowed; no conditional state exists."""


class SelfEnergyPoleError(QrbmError, ArithmeticError):
    """Resolvent evaluation point sits on (or too close to) an eigenvalue."""


class SpectrumPartitionError(QrbmError, ValueError):
    """The spectral cutoff leaves the low or high subspace empty."""


class UnsupportedLocalityError(QrbmError, ValueError):
    """A Hamiltonian term acts on more qubits than the configured domain cap."""


class DegenerateGapError(QrbmError, ValueError):
    """A construction assumed a nondegenerate spectral gap and there is none."""


class ZeroOverlapError(QrbmError, ArithmeticError):
    """The reference product state has no overlap with the target ground state."""


class NumericalError(QrbmError, ArithmeticError):
    """A solver produced non-finite or contract-violating numbers."""


class ConfigError(QrbmError, ValueError):
    """Invalid experiment configuration; carries per-field diagnostics."""

    def __init__(self, message: str, details: list[str] | None = None):
        super().__init__(message)
        self.details = details or []

    def to_dict(self) -> dict:
        return {"error": "config", "message": str(self), "details": self.details}
