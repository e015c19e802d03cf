"""Shared fixtures and the independent full-matrix oracle.

The oracle builds each gate's full-space matrix by an explicit basis
permutation plus a Kronecker product, a construction that shares no code
with the engines' strided kernels or the fusion pass's embedding, and
multiplies the matrices out per the circuit order. It is deliberately slow
and only meant for small qubit counts.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from aqsim.circuit import Circuit, GateKind, GateOp, effective_unitary


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def embed_full(u: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """Oracle embedding: permute target qubits to the low bits, kron, permute back."""
    q = len(targets)
    others = [t for t in range(n) if t not in targets]
    new_position = list(targets) + others  # new bit i holds old qubit new_position[i]
    dim = 1 << n
    perm = np.zeros((dim, dim))
    for k in range(dim):
        kp = 0
        for pos, old in enumerate(new_position):
            kp |= ((k >> old) & 1) << pos
        perm[kp, k] = 1.0
    big = np.kron(np.eye(1 << (n - q)), u)  # low bits carry the gate
    return perm.T @ big @ perm


def full_unitary(circuit: Circuit) -> np.ndarray:
    """Explicit product of all embedded gate matrices, later gates on the left."""
    dim = 1 << circuit.num_qubits
    total = np.eye(dim, dtype=complex)
    for op in circuit.gates:
        total = embed_full(effective_unitary(op), op.targets, circuit.num_qubits) @ total
    return total


def oracle_state(circuit: Circuit) -> np.ndarray:
    """Final state per the full-matrix product applied to |0...0>."""
    return full_unitary(circuit)[:, 0].copy()


_NAMED_1Q = [GateKind.I, GateKind.X, GateKind.Y, GateKind.Z, GateKind.H,
             GateKind.S, GateKind.T, GateKind.RX, GateKind.RY, GateKind.RZ,
             GateKind.U3]
_NAMED_MULTI = [GateKind.CNOT, GateKind.CZ, GateKind.SWAP, GateKind.TOFFOLI]


def random_gate(rng: np.random.Generator, n: int,
                allow_custom: bool = True) -> GateOp:
    choices = list(_NAMED_1Q)
    if n >= 2:
        choices += [k for k in _NAMED_MULTI if (k.arity or 0) <= n]
        if allow_custom:
            choices += [GateKind.CUSTOM, GateKind.CUSTOM]
    kind = choices[rng.integers(0, len(choices))]
    if kind is GateKind.CUSTOM:
        arity = int(rng.integers(1, min(n, 2) + 1))
        targets = tuple(int(t) for t in rng.choice(n, size=arity, replace=False))
        return GateOp(kind, targets, (), haar_unitary(rng, 1 << arity))
    arity = kind.arity
    targets = tuple(int(t) for t in rng.choice(n, size=arity, replace=False))
    params = tuple(rng.uniform(-2 * math.pi, 2 * math.pi)
                   for _ in range(kind.param_count))
    return GateOp(kind, targets, params)


def random_circuit(rng: np.random.Generator, num_qubits: int, num_gates: int,
                   allow_custom: bool = True) -> Circuit:
    gates = [random_gate(rng, num_qubits, allow_custom) for _ in range(num_gates)]
    return Circuit(num_qubits, gates, name=f"random-{num_qubits}x{num_gates}")


def circuits_structurally_equal(a: Circuit, b: Circuit, tol: float = 1e-15) -> bool:
    if a.num_qubits != b.num_qubits or len(a.gates) != len(b.gates):
        return False
    for ga, gb in zip(a.gates, b.gates):
        if ga.kind is not gb.kind or ga.targets != gb.targets:
            return False
        if len(ga.params) != len(gb.params):
            return False
        if any(abs(x - y) > tol for x, y in zip(ga.params, gb.params)):
            return False
        if (ga.matrix is None) != (gb.matrix is None):
            return False
        if ga.matrix is not None and np.max(np.abs(ga.matrix - gb.matrix)) > tol:
            return False
    return True


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
