"""Single/double precision choice from the accumulated rounding-error bound.

The bound g * 2^n * eps_mach is deliberately pessimistic (it scales with the
full state dimension), so double precision wins for anything but shallow
circuits on moderate qubit counts. The decision is made once, before
simulation, and applies uniformly to every gate.
"""
from __future__ import annotations

from dataclasses import dataclass

from .circuit import Precision

# Default tolerance: keeps single precision reachable for shallow circuits
# (g < 50, n <= 16) while deep/wide circuits fall back to double.
DEFAULT_TOLERANCE = 1e-4


@dataclass(frozen=True)
class PrecisionDecision:
    chosen: Precision
    estimated_error_single: float
    tolerance: float
    rationale: str


def select_precision(num_qubits: int, gate_count: int,
                     tolerance: float = DEFAULT_TOLERANCE) -> PrecisionDecision:
    """Pick single precision iff its error bound g * 2^n * eps fits the tolerance."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    if gate_count < 0:
        raise ValueError("gate_count must be >= 0")
    if not tolerance > 0:
        raise ValueError("tolerance must be > 0")
    bound = gate_count * (2.0 ** num_qubits) * Precision.SINGLE.epsilon_mach
    if bound <= tolerance:
        chosen = Precision.SINGLE
        rationale = (f"estimated single-precision error {bound:.3e} <= "
                     f"tolerance {tolerance:.3e}")
    else:
        chosen = Precision.DOUBLE
        rationale = (f"estimated single-precision error {bound:.3e} > "
                     f"tolerance {tolerance:.3e}")
    return PrecisionDecision(chosen, bound, tolerance, rationale)
