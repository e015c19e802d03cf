"""Small-scale density-matrix evolution with per-gate depolarizing noise.

This is the cross-validation arm: at p = 0 its diagonal must reproduce the
state-vector engines' probabilities, and at p > 0 it quantifies how outcome
distributions degrade. The channel convention is the Pauli-twirl form
rho -> (1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z), applied independently
to every qubit a gate touches, in target order.

Dense matrices only (the qubit cap keeps 4^n entries small); no superoperator
construction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .circuit import (Circuit, GateKind, StateVector, effective_unitary,
                      expand_unitary, gate_matrix, require_valid)
from .engines import SampleResult

DEFAULT_QUBIT_CAP = 8
HARD_QUBIT_CAP = 10

TRACE_ATOL = 1e-10
HERMITIAN_ATOL = 1e-10
PSD_ATOL = 1e-9


@dataclass
class DensityMatrix:
    num_qubits: int
    matrix: np.ndarray  # dense 2^n x 2^n, complex128

    def validate(self) -> None:
        """Check trace one, Hermiticity, and non-negative diagonal."""
        tr = complex(np.trace(self.matrix))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"trace deviates from 1 by {abs(tr - 1.0):.2e}")
        herm = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        if herm > HERMITIAN_ATOL:
            raise ValueError(f"not Hermitian (deviation {herm:.2e})")
        min_diag = float(np.min(self.matrix.real.diagonal()))
        if min_diag < -PSD_ATOL:
            raise ValueError(f"negative diagonal entry {min_diag:.2e}")

    def diagonal_probabilities(self) -> np.ndarray:
        """<x|rho|x> for all basis states, clipped of float-level negatives."""
        return np.clip(self.matrix.real.diagonal().copy(), 0.0, None)


def _depolarize_qubit(rho: np.ndarray, paulis: tuple[np.ndarray, ...],
                      p: float) -> np.ndarray:
    x, y, z = paulis
    mixed = x @ rho @ x + y @ rho @ y + z @ rho @ z
    return (1.0 - p) * rho + (p / 3.0) * mixed


def evolve_noisy(circuit: Circuit, p: float, *,
                 qubit_cap: int = DEFAULT_QUBIT_CAP,
                 check_steps: bool = True) -> DensityMatrix:
    """Evolve |0...0><0...0| through the circuit with depolarizing rate p.

    Each gate conjugates rho by its full-space unitary, then the single-qubit
    channel hits every qubit the gate touched. With check_steps, trace and
    Hermiticity are verified after every channel application.
    """
    n = circuit.num_qubits
    cap = min(qubit_cap, HARD_QUBIT_CAP)
    if n > cap:
        raise ValueError(f"density-matrix evolution capped at {cap} qubits, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability must be in [0, 1], got {p}")
    require_valid(circuit)

    dim = 1 << n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0

    pauli_cache: dict[int, tuple[np.ndarray, ...]] = {}

    def paulis_for(qubit: int) -> tuple[np.ndarray, ...]:
        if qubit not in pauli_cache:
            pauli_cache[qubit] = tuple(
                expand_unitary(gate_matrix(kind), [qubit], n)
                for kind in (GateKind.X, GateKind.Y, GateKind.Z))
        return pauli_cache[qubit]

    state = DensityMatrix(n, rho)
    for op in circuit.gates:
        u = expand_unitary(effective_unitary(op), list(op.targets), n)
        state.matrix = u @ state.matrix @ u.conj().T
        if p > 0.0:
            for qubit in op.targets:
                state.matrix = _depolarize_qubit(state.matrix, paulis_for(qubit), p)
                if check_steps:
                    state.validate()
        elif check_steps:
            state.validate()
    return state


def measure_distribution(rho: DensityMatrix) -> dict[str, float]:
    """Computational-basis outcome probabilities keyed by bitstring (qubit 0 rightmost)."""
    probs = rho.diagonal_probabilities()
    total = float(probs.sum())
    if abs(total - 1.0) > TRACE_ATOL:
        raise ValueError(f"diagonal sums to {total}, not 1")
    n = rho.num_qubits
    return {format(i, f"0{n}b"): float(p) for i, p in enumerate(probs)}


def statevector_distribution(state: StateVector) -> dict[str, float]:
    """|amp|^2 keyed the same way as measure_distribution, for cross-checks."""
    probs = state.probabilities()
    n = state.num_qubits
    return {format(i, f"0{n}b"): float(p) for i, p in enumerate(probs)}


@dataclass(frozen=True)
class DistributionMetrics:
    classical_fidelity: float
    tvd: float


def metrics(p_dist: dict[str, float], q_dist: dict[str, float]) -> DistributionMetrics:
    """Classical fidelity (sum sqrt(p q))^2 and total variation distance.

    Missing keys count as probability zero; the distributions must be over
    the same bit length and each sum to 1 within 1e-6.
    """
    lengths = {len(k) for k in p_dist} | {len(k) for k in q_dist}
    if len(lengths) > 1:
        raise ValueError(f"bitstring lengths differ: {sorted(lengths)}")
    for name, dist in (("p", p_dist), ("q", q_dist)):
        total = sum(dist.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"distribution {name} sums to {total}, not 1")
    keys = set(p_dist) | set(q_dist)
    overlap = 0.0
    l1 = 0.0
    for k in keys:
        p = max(p_dist.get(k, 0.0), 0.0)
        q = max(q_dist.get(k, 0.0), 0.0)
        overlap += math.sqrt(p * q)
        l1 += abs(p - q)
    return DistributionMetrics(classical_fidelity=overlap ** 2, tvd=0.5 * l1)


def counts_to_distribution(counts: SampleResult) -> dict[str, float]:
    if counts.shots <= 0:
        raise ValueError("no shots recorded")
    return {k: v / counts.shots for k, v in counts.counts.items()}


def correct_outcome_probability(counts: SampleResult,
                                ideal_support: set[str] | frozenset[str]) -> float:
    """Measured probability mass on the ideal output states."""
    if counts.shots <= 0:
        raise ValueError("no shots recorded")
    hit = sum(v for k, v in counts.counts.items() if k in ideal_support)
    return hit / counts.shots


def load_counts(text: str) -> SampleResult:
    """Counts-file format: {"shots": int, "counts": {bitstring: int}}."""
    doc = json.loads(text)
    shots = doc.get("shots")
    counts = doc.get("counts")
    if not isinstance(shots, int) or shots < 0:
        raise ValueError(f"'shots' must be a non-negative integer, got {shots!r}")
    if not isinstance(counts, dict):
        raise ValueError("'counts' must be an object of bitstring: count")
    parsed: dict[str, int] = {}
    for key, value in counts.items():
        if not isinstance(key, str) or not set(key) <= {"0", "1"}:
            raise ValueError(f"count key {key!r} is not a bitstring")
        if not isinstance(value, int) or value < 0:
            raise ValueError(f"count for {key!r} must be a non-negative integer")
        parsed[key] = value
    if sum(parsed.values()) != shots:
        raise ValueError("counts do not sum to shots")
    return SampleResult(parsed, shots)
