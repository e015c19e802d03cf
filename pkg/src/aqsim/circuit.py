"""Circuit intermediate representation: gate vocabulary, canonical matrices, state vectors.

Conventions (global, relied on by every other module):

- Qubit indexing is little-endian: bit t of a basis index is qubit t, so
  applying X to qubit t of |0...0> puts the amplitude at index 2**t.
- Inside a multi-qubit gate matrix, local basis bit j corresponds to
  ``targets[j]``. Controlled gates list controls first: CNOT targets are
  (control, target), TOFFOLI targets are (control, control, target).
- Angles are radians.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

_SQRT2_INV = 1.0 / math.sqrt(2.0)

# Tolerance for accepting externally supplied unitaries: loose enough for
# matrices round-tripped through decimal text, tight enough to catch errors.
UNITARY_ATOL = 1e-10


class Precision(enum.Enum):
    """Floating-point width of the complex amplitudes."""

    SINGLE = "single"
    DOUBLE = "double"

    @property
    def epsilon_mach(self) -> float:
        return 1.19e-7 if self is Precision.SINGLE else 2.22e-16

    @property
    def amplitude_bytes(self) -> int:
        return 8 if self is Precision.SINGLE else 16

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.complex64 if self is Precision.SINGLE else np.complex128)

    @property
    def norm_atol(self) -> float:
        """Allowed drift of sum(|amp|^2) from 1 after a gate sequence."""
        return 1e-6 if self is Precision.SINGLE else 1e-10


class GateKind(enum.Enum):
    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"
    H = "H"
    S = "S"
    T = "T"
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    CNOT = "CNOT"
    CZ = "CZ"
    SWAP = "SWAP"
    TOFFOLI = "TOFFOLI"
    U3 = "U3"
    CUSTOM = "CUSTOM"

    @property
    def arity(self) -> int | None:
        """Qubit count for named kinds; None for CUSTOM (set by its targets)."""
        return _GATE_ARITY[self]

    @property
    def param_count(self) -> int:
        return _GATE_PARAMS[self]


_GATE_ARITY = {
    GateKind.I: 1, GateKind.X: 1, GateKind.Y: 1, GateKind.Z: 1,
    GateKind.H: 1, GateKind.S: 1, GateKind.T: 1,
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1,
    GateKind.CNOT: 2, GateKind.CZ: 2, GateKind.SWAP: 2,
    GateKind.TOFFOLI: 3, GateKind.U3: 1, GateKind.CUSTOM: None,
}
_GATE_PARAMS = {
    kind: 0 for kind in GateKind
}
_GATE_PARAMS.update({GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.U3: 3})

_FIXED_MATRICES = {
    GateKind.I: np.eye(2, dtype=complex),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.T: np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
    # CNOT: control = local bit 0 (targets[0]), target = local bit 1.
    GateKind.CNOT: np.array(
        [[1, 0, 0, 0],
         [0, 0, 0, 1],
         [0, 0, 1, 0],
         [0, 1, 0, 0]], dtype=complex),
    GateKind.CZ: np.diag([1, 1, 1, -1]).astype(complex),
    GateKind.SWAP: np.array(
        [[1, 0, 0, 0],
         [0, 0, 1, 0],
         [0, 1, 0, 0],
         [0, 0, 0, 1]], dtype=complex),
}

_toffoli = np.eye(8, dtype=complex)
# controls = local bits 0 and 1, target = local bit 2: swap |011> and |111>
_toffoli[[3, 7]] = _toffoli[[7, 3]]
_FIXED_MATRICES[GateKind.TOFFOLI] = _toffoli
del _toffoli


def gate_matrix(kind: GateKind, params: tuple[float, ...] | list[float] = ()) -> np.ndarray:
    """Canonical unitary for a named gate kind, in the local-ordering convention.

    Rotations follow R_a(theta) = exp(-i * theta * A / 2); U3 is the general
    single-qubit gate with Euler angles (theta, phi, lam).
    """
    if kind is GateKind.CUSTOM:
        raise ValueError("CUSTOM gates carry an explicit matrix; gate_matrix cannot derive one")
    params = tuple(float(p) for p in params)
    if len(params) != kind.param_count:
        raise ValueError(
            f"{kind.value} takes {kind.param_count} parameter(s), got {len(params)}")
    if kind in _FIXED_MATRICES:
        return _FIXED_MATRICES[kind].copy()
    if kind is GateKind.RX:
        (theta,) = params
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind is GateKind.RY:
        (theta,) = params
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind is GateKind.RZ:
        (theta,) = params
        return np.array(
            [[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]], dtype=complex)
    if kind is GateKind.U3:
        theta, phi, lam = params
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return np.array(
            [[c, -np.exp(1j * lam) * s],
             [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]], dtype=complex)
    raise ValueError(f"no matrix rule for {kind}")  # pragma: no cover


@dataclass(frozen=True, eq=False)
class GateOp:
    """One gate: a canonical kind (or CUSTOM with explicit matrix) plus targets."""

    kind: GateKind
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()
    matrix: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.matrix is not None:
            object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=complex))

    @property
    def arity(self) -> int:
        return len(self.targets)


@dataclass
class Circuit:
    """Ordered gate list over num_qubits qubits; the unit flowing through the pipeline."""

    num_qubits: int
    gates: list[GateOp] = field(default_factory=list)
    name: str = ""

    def max_gate_width(self) -> int:
        return max((g.arity for g in self.gates), default=1)


@dataclass
class StateVector:
    """2^n complex amplitudes at a fixed precision, index k read little-endian.

    A state is owned by exactly one engine at a time; engines may swap the
    underlying buffer between gates, so always re-read ``amplitudes`` rather
    than holding a reference across gate applications.
    """

    num_qubits: int
    precision: Precision
    amplitudes: np.ndarray

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes.astype(np.complex128)) ** 2))

    def probabilities(self) -> np.ndarray:
        """|amp|^2 as float64, in basis-index order."""
        return np.abs(self.amplitudes.astype(np.complex128)) ** 2


def effective_unitary(op: GateOp) -> np.ndarray:
    """Uniform matrix accessor: derived for named kinds, stored for CUSTOM."""
    if op.kind is GateKind.CUSTOM:
        if op.matrix is None:
            raise ValueError("CUSTOM gate without a matrix")
        return op.matrix
    return gate_matrix(op.kind, op.params)


def unitarity_error(matrix: np.ndarray) -> float:
    """max|U†U - I|, the deviation from unitarity."""
    matrix = np.asarray(matrix, dtype=complex)
    dim = matrix.shape[0]
    return float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(dim))))


@dataclass(frozen=True)
class Violation:
    gate_index: int
    message: str


def validate(circuit: Circuit) -> list[Violation]:
    """All invariant violations in a circuit; the circuit is valid iff empty.

    Violations are data, not faults: callers decide whether to raise.
    """
    violations: list[Violation] = []
    if circuit.num_qubits < 1:
        violations.append(Violation(-1, f"num_qubits must be >= 1, got {circuit.num_qubits}"))
        return violations
    for i, op in enumerate(circuit.gates):
        if len(set(op.targets)) != len(op.targets):
            violations.append(Violation(i, f"duplicate target at gate {i}: {op.targets}"))
            continue
        bad = [t for t in op.targets if not 0 <= t < circuit.num_qubits]
        if bad:
            violations.append(Violation(i, f"target out of range at gate {i}: {bad}"))
            continue
        if op.kind is GateKind.CUSTOM:
            if op.matrix is None:
                violations.append(Violation(i, f"CUSTOM gate {i} has no matrix"))
                continue
            dim = 2 ** op.arity
            if op.matrix.shape != (dim, dim):
                violations.append(Violation(
                    i, f"matrix shape {op.matrix.shape} at gate {i}, expected {(dim, dim)}"))
                continue
        else:
            if op.kind.arity != op.arity:
                violations.append(Violation(
                    i, f"{op.kind.value} takes {op.kind.arity} qubit(s), got {op.arity} at gate {i}"))
                continue
            if len(op.params) != op.kind.param_count:
                violations.append(Violation(
                    i, f"{op.kind.value} takes {op.kind.param_count} parameter(s), "
                       f"got {len(op.params)} at gate {i}"))
                continue
            if not all(math.isfinite(p) for p in op.params):
                violations.append(Violation(i, f"non-finite parameter at gate {i}"))
                continue
        err = unitarity_error(effective_unitary(op))
        if not err <= UNITARY_ATOL:
            violations.append(Violation(i, f"non-unitary at gate {i} (deviation {err:.2e})"))
    return violations


def require_valid(circuit: Circuit) -> None:
    """Raise ValueError listing all violations if the circuit is invalid."""
    violations = validate(circuit)
    if violations:
        detail = "; ".join(v.message for v in violations)
        raise ValueError(f"invalid circuit: {detail}")


def expand_unitary(matrix: np.ndarray, positions: list[int] | tuple[int, ...],
                   width: int) -> np.ndarray:
    """Lift a gate matrix to a 2^width space by tensoring identity elsewhere.

    ``positions[j]`` is the bit (within the width-qubit space) that local
    basis bit j of ``matrix`` acts on.
    """
    matrix = np.asarray(matrix, dtype=complex)
    q = len(positions)
    if matrix.shape != (1 << q, 1 << q):
        raise ValueError(f"matrix shape {matrix.shape} does not match {q} positions")
    dim = 1 << width
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        local_in = 0
        rest = col
        for j, pos in enumerate(positions):
            local_in |= ((col >> pos) & 1) << j
            rest &= ~(1 << pos)
        for local_out in range(1 << q):
            row = rest
            for j, pos in enumerate(positions):
                row |= ((local_out >> j) & 1) << pos
            out[row, col] = matrix[local_out, local_in]
    return out
