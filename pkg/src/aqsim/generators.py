"""Built-in benchmark circuit families.

- ghz / bell: H plus a CNOT chain.
- qft: Hadamard + controlled-phase ladder, with each controlled phase
  decomposed into {RZ, CNOT, RZ, CNOT, RZ} so the circuit stays inside the
  canonical gate set (output is bit-reversed, as is standard when the final
  swap network is omitted).
- random_su2: Haar-random single-qubit gates on uniformly chosen qubits,
  expressed as U3 with the angle distribution that makes the draw uniform.
- ansatz: hardware-efficient layers of RY/RZ rotations plus a CNOT ring,
  ending with a final rotation layer.
"""
from __future__ import annotations

import math

import numpy as np

from .circuit import Circuit, GateKind, GateOp


def ghz_circuit(num_qubits: int) -> Circuit:
    """H on qubit 0 followed by a chain of CNOTs."""
    if num_qubits < 2:
        raise ValueError("a GHZ circuit needs at least 2 qubits")
    gates = [GateOp(GateKind.H, (0,))]
    gates += [GateOp(GateKind.CNOT, (i, i + 1)) for i in range(num_qubits - 1)]
    return Circuit(num_qubits, gates, name=f"ghz-{num_qubits}")


def bell_circuit() -> Circuit:
    circuit = ghz_circuit(2)
    circuit.name = "bell"
    return circuit


def _controlled_phase(control: int, target: int, theta: float) -> list[GateOp]:
    """CP(theta) up to global phase: RZ(t/2)@c, CX, RZ(-t/2)@t, CX, RZ(t/2)@t."""
    return [
        GateOp(GateKind.RZ, (control,), (theta / 2,)),
        GateOp(GateKind.CNOT, (control, target)),
        GateOp(GateKind.RZ, (target,), (-theta / 2,)),
        GateOp(GateKind.CNOT, (control, target)),
        GateOp(GateKind.RZ, (target,), (theta / 2,)),
    ]


def qft_circuit(num_qubits: int) -> Circuit:
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    gates: list[GateOp] = []
    for target in range(num_qubits):
        gates.append(GateOp(GateKind.H, (target,)))
        for control in range(target + 1, num_qubits):
            theta = math.pi / (1 << (control - target))
            gates += _controlled_phase(control, target, theta)
    return Circuit(num_qubits, gates, name=f"qft-{num_qubits}")


def haar_u3_angles(rng: np.random.Generator) -> tuple[float, float, float]:
    """U3 angles distributed so the resulting gate is Haar-uniform on SU(2)."""
    theta = 2.0 * math.asin(math.sqrt(rng.random()))
    phi = rng.uniform(0.0, 2.0 * math.pi)
    lam = rng.uniform(0.0, 2.0 * math.pi)
    return theta, phi, lam


def random_su2_circuit(num_qubits: int, num_gates: int, seed: int) -> Circuit:
    """Seeded random single-qubit circuit: one Haar U3 per gate, uniform target."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    rng = np.random.default_rng(seed)
    gates = []
    for _ in range(num_gates):
        target = int(rng.integers(0, num_qubits))
        gates.append(GateOp(GateKind.U3, (target,), haar_u3_angles(rng)))
    return Circuit(num_qubits, gates, name=f"random-{num_qubits}")


def _ring_pairs(num_qubits: int) -> list[tuple[int, int]]:
    """All (q, q+1 mod n) ring edges, scheduled brick-style: even-origin pairs
    first, then odd-origin pairs, so disjoint CNOTs share a layer."""
    evens = [(q, q + 1) for q in range(0, num_qubits - 1, 2)]
    odds = [(q, (q + 1) % num_qubits) for q in range(1, num_qubits, 2)]
    pairs = evens + odds
    if num_qubits % 2 == 1:  # odd ring: the wrap edge cannot join either row
        pairs.append((num_qubits - 1, 0))
    return pairs


def ansatz_circuit(num_qubits: int, layers: int = 4, seed: int = 0) -> Circuit:
    """Hardware-efficient ansatz: RY+RZ on every qubit, then a CNOT ring, repeated."""
    if num_qubits < 2:
        raise ValueError("the ansatz needs at least 2 qubits")
    rng = np.random.default_rng(seed)
    gates: list[GateOp] = []

    def rotation_layer():
        for q in range(num_qubits):
            gates.append(GateOp(GateKind.RY, (q,), (rng.uniform(0, 2 * math.pi),)))
            gates.append(GateOp(GateKind.RZ, (q,), (rng.uniform(0, 2 * math.pi),)))

    for _ in range(layers):
        rotation_layer()
        for pair in _ring_pairs(num_qubits):
            gates.append(GateOp(GateKind.CNOT, pair))
    rotation_layer()
    return Circuit(num_qubits, gates, name=f"ansatz-{num_qubits}")


def builtin_circuit(spec: str, seed: int = 0) -> Circuit:
    """Resolve generator specs like "bell", "ghz-5", "qft-20", "random-20", "ansatz-20".

    random-N draws 20N gates (the fusion-benchmark convention); an explicit
    count can be appended as random-N-G.
    """
    parts = spec.lower().split("-")
    name = parts[0]
    try:
        if name == "bell" and len(parts) == 1:
            return bell_circuit()
        if name == "ghz" and len(parts) == 2:
            return ghz_circuit(int(parts[1]))
        if name == "qft" and len(parts) == 2:
            return qft_circuit(int(parts[1]))
        if name == "random" and len(parts) in (2, 3):
            n = int(parts[1])
            count = int(parts[2]) if len(parts) == 3 else 20 * n
            return random_su2_circuit(n, count, seed)
        if name == "ansatz" and len(parts) in (2, 3):
            n = int(parts[1])
            layers = int(parts[2]) if len(parts) == 3 else 4
            return ansatz_circuit(n, layers, seed)
    except ValueError as exc:
        raise ValueError(f"bad generator spec {spec!r}: {exc}") from None
    raise ValueError(
        f"unknown generator spec {spec!r}; expected bell, ghz-N, qft-N, "
        f"random-N[-G], or ansatz-N[-LAYERS]")
