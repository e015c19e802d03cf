"""Execution engines: state initialization, gate application, measurement sampling.

Two engines ship by default. "reference" applies each kernel over the whole
amplitude array in one call and is the correctness baseline and universal
fallback. "parallel" partitions large arrays into contiguous chunks and runs
the same kernels across a thread pool (numpy releases the GIL inside ufunc
loops, so chunks genuinely overlap).

Both engines invoke the identical kernel functions below, so for the same
gate sequence their outputs are bit-identical, which is what makes mid-run
state migration between them exact. Do not "optimize" one engine's arithmetic
independently: even reordering ufunc operands changes results in the last bit.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, GateOp, Precision, StateVector, effective_unitary

# Chunked dispatch only pays off once the array is well past cache size;
# below this the thread handoff costs more than it saves.
PARALLEL_MIN_AMPLITUDES = 1 << 17
# Contiguous chunks handed to the pool stay at or above this many amplitudes.
MIN_CHUNK_AMPLITUDES = 1 << 14


class AllocationError(Exception):
    """State-vector allocation refused; carries the byte counts involved.

    A state that fills the whole capacity is refused too: gate application
    needs working space beyond the amplitudes themselves.
    """

    def __init__(self, requested_bytes: int, capacity_bytes: int | None):
        self.requested_bytes = requested_bytes
        self.capacity_bytes = capacity_bytes
        super().__init__(
            f"requested {requested_bytes} bytes does not fit within engine "
            f"capacity {capacity_bytes}")


@dataclass(frozen=True)
class EngineId:
    name: str
    requires_accelerator: bool = False


@dataclass
class SampleResult:
    """Measurement counts keyed by bitstring (qubit 0 rightmost)."""

    counts: dict[str, int]
    shots: int


# --- kernels (shared verbatim by all engines; see module docstring) ---------

def _apply_pair_block(a: np.ndarray, b: np.ndarray, u: np.ndarray) -> None:
    """Two-amplitude butterfly for a single-qubit gate on paired slices."""
    na = u[0, 0] * a + u[0, 1] * b
    nb = u[1, 0] * a + u[1, 1] * b
    a[:] = na
    b[:] = nb


def _pair_views(amps: np.ndarray, target: int) -> tuple[np.ndarray, np.ndarray]:
    """Paired bit-0/bit-1 views for a single-qubit gate with stride 2^target.

    The target-0 case collapses to 1-D strided views; keeping the trailing
    length-1 axis would make numpy run one inner loop per pair.
    """
    if target == 0:
        view = amps.reshape(-1, 2)
        return view[:, 0], view[:, 1]
    view = amps.reshape(-1, 2, 1 << target)
    return view[:, 0, :], view[:, 1, :]


def _apply_group_block(amps: np.ndarray, u: np.ndarray, idx: list[np.ndarray]) -> None:
    """Gather the 2^q amplitudes of each group, multiply by u, scatter back."""
    dim = len(idx)
    cols = [amps[ix] for ix in idx]
    for i in range(dim):
        acc = u[i, 0] * cols[0]
        for j in range(1, dim):
            acc += u[i, j] * cols[j]
        amps[idx[i]] = acc


def _group_indices(n: int, targets: tuple[int, ...]) -> list[np.ndarray]:
    """Index arrays addressing each local basis state across all 2^(n-q) groups."""
    q = len(targets)
    base = np.arange(1 << (n - q), dtype=np.intp)
    for t in sorted(targets):
        low = base & ((1 << t) - 1)
        base = ((base >> t) << (t + 1)) | low
    offsets = [
        sum(1 << targets[b] for b in range(q) if (j >> b) & 1)
        for j in range(1 << q)
    ]
    return [base + off for off in offsets]


# --- engines -----------------------------------------------------------------

class Engine:
    """Common backend interface: init_state, apply_gate, sample-ready output.

    ``capacity_bytes`` caps a single state allocation (None = uncapped);
    ``live_states`` counts init_state/release pairs for leak checks.
    """

    def __init__(self, name: str, *, requires_accelerator: bool = False,
                 capacity_bytes: int | None = None):
        self.id = EngineId(name, requires_accelerator)
        self.capacity_bytes = capacity_bytes
        self.live_states = 0

    @property
    def name(self) -> str:
        return self.id.name

    def is_available(self) -> bool:
        return True

    def init_state(self, num_qubits: int, precision: Precision) -> StateVector:
        """Allocate |0...0>: amplitude 1 at index 0."""
        if num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        requested = (1 << num_qubits) * precision.amplitude_bytes
        if self.capacity_bytes is not None and requested >= self.capacity_bytes:
            raise AllocationError(requested, self.capacity_bytes)
        amps = np.zeros(1 << num_qubits, dtype=precision.dtype)
        amps[0] = 1.0
        self.live_states += 1
        return StateVector(num_qubits, precision, amps)

    def adopt(self, num_qubits: int, precision: Precision,
              amplitudes: np.ndarray) -> StateVector:
        """Take ownership of an amplitude buffer migrated from another engine."""
        self.live_states += 1
        return StateVector(num_qubits, precision, amplitudes)

    def release(self, state: StateVector) -> None:
        del state
        self.live_states -= 1

    def apply_gate(self, state: StateVector, op: GateOp) -> StateVector:
        """In-place state update by the gate's embedded unitary."""
        n = state.num_qubits
        if any(not 0 <= t < n for t in op.targets):
            raise ValueError(f"target out of range for {n} qubits: {op.targets}")
        u = effective_unitary(op).astype(state.precision.dtype)
        if op.arity == 1:
            self._apply_single(state, u, op.targets[0])
        else:
            self._apply_multi(state, u, op.targets)
        return state

    def _apply_single(self, state: StateVector, u: np.ndarray, target: int) -> None:
        raise NotImplementedError

    def _apply_multi(self, state: StateVector, u: np.ndarray,
                     targets: tuple[int, ...]) -> None:
        raise NotImplementedError

    def synchronize(self) -> None:
        """Barrier for engines with asynchronous kernels; no-op by default."""

    def run_circuit(self, circuit: Circuit, precision: Precision = Precision.DOUBLE,
                    checkpoint=None) -> StateVector:
        """init_state then apply each gate in order.

        ``checkpoint(state, i)`` is invoked before applying gate i; the memory
        governor hooks in here to request fallback between gates.
        """
        state = self.init_state(circuit.num_qubits, precision)
        for i, op in enumerate(circuit.gates):
            if checkpoint is not None:
                checkpoint(state, i)
            self.apply_gate(state, op)
        self.synchronize()
        return state


class ReferenceEngine(Engine):
    """Whole-array kernel invocations; the correctness oracle and fallback."""

    def __init__(self, *, capacity_bytes: int | None = None):
        super().__init__("reference", capacity_bytes=capacity_bytes)

    def _apply_single(self, state: StateVector, u: np.ndarray, target: int) -> None:
        a, b = _pair_views(state.amplitudes, target)
        _apply_pair_block(a, b, u)

    def _apply_multi(self, state: StateVector, u: np.ndarray,
                     targets: tuple[int, ...]) -> None:
        idx = _group_indices(state.num_qubits, targets)
        _apply_group_block(state.amplitudes, u, idx)


class ParallelEngine(Engine):
    """Chunked data-parallel kernels over contiguous slices of the amplitudes.

    One chunk runs inline on the calling thread while its sibling runs on the
    pool, so the dispatch overhead is a single future per gate. Small states
    skip dispatch entirely and match the reference path exactly.
    """

    def __init__(self, *, capacity_bytes: int | None = None,
                 max_workers: int | None = None,
                 min_amplitudes: int = PARALLEL_MIN_AMPLITUDES):
        super().__init__("parallel", capacity_bytes=capacity_bytes)
        self._workers = max_workers if max_workers is not None else (os.cpu_count() or 1)
        self._min_amplitudes = min_amplitudes
        self._pool: ThreadPoolExecutor | None = None

    def _executor(self) -> ThreadPoolExecutor:
        if self._pool is None:
            self._pool = ThreadPoolExecutor(
                max_workers=max(1, self._workers - 1),
                thread_name_prefix="aqsim-par")
        return self._pool

    def _apply_single(self, state: StateVector, u: np.ndarray, target: int) -> None:
        a, b = _pair_views(state.amplitudes, target)
        if (self._workers >= 2 and state.amplitudes.size >= self._min_amplitudes
                and state.amplitudes.size // 2 >= MIN_CHUNK_AMPLITUDES):
            if a.ndim == 1 or a.shape[0] >= 2:
                mid = a.shape[0] // 2
                fut = self._executor().submit(_apply_pair_block, a[mid:], b[mid:], u)
                _apply_pair_block(a[:mid], b[:mid], u)
                fut.result()
                return
            if a.shape[1] >= 2:
                mid = a.shape[1] // 2
                fut = self._executor().submit(
                    _apply_pair_block, a[:, mid:], b[:, mid:], u)
                _apply_pair_block(a[:, :mid], b[:, :mid], u)
                fut.result()
                return
        _apply_pair_block(a, b, u)

    def _apply_multi(self, state: StateVector, u: np.ndarray,
                     targets: tuple[int, ...]) -> None:
        amps = state.amplitudes
        idx = _group_indices(state.num_qubits, targets)
        groups = idx[0].size
        if (self._workers >= 2 and amps.size >= self._min_amplitudes
                and groups >= 2 and amps.size // 2 >= MIN_CHUNK_AMPLITUDES):
            mid = groups // 2
            head = [ix[:mid] for ix in idx]
            tail = [ix[mid:] for ix in idx]
            fut = self._executor().submit(_apply_group_block, amps, u, tail)
            _apply_group_block(amps, u, head)
            fut.result()
            return
        _apply_group_block(amps, u, idx)


# --- registry ----------------------------------------------------------------

_REGISTRY: dict[str, Engine] = {}


def register_engine(engine: Engine) -> None:
    if engine.name in _REGISTRY:
        raise ValueError(f"engine {engine.name!r} already registered")
    _REGISTRY[engine.name] = engine


def get_engine(name: str) -> Engine:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown engine {name!r}; registered: {sorted(_REGISTRY)}") from None


def available_engines() -> list[EngineId]:
    return [e.id for e in _REGISTRY.values() if e.is_available()]


def registered_engines() -> list[Engine]:
    return list(_REGISTRY.values())


register_engine(ReferenceEngine())
register_engine(ParallelEngine())


def run_circuit(engine: Engine | EngineId | str, circuit: Circuit,
                precision: Precision = Precision.DOUBLE, checkpoint=None) -> StateVector:
    """Run a circuit on an engine given by instance, id, or registered name."""
    if isinstance(engine, EngineId):
        engine = get_engine(engine.name)
    elif isinstance(engine, str):
        engine = get_engine(engine)
    return engine.run_circuit(circuit, precision, checkpoint=checkpoint)


# --- sampling and fidelity -----------------------------------------------------

def sample_from_probabilities(probs: np.ndarray, shots: int, seed: int,
                              num_qubits: int) -> SampleResult:
    """Inverse-CDF multinomial draws with a counter-based (Philox) generator.

    Deterministic for a given seed regardless of which engine produced the
    distribution, and reproducible across platforms.
    """
    if shots < 0:
        raise ValueError("shots must be >= 0")
    if shots == 0:
        return SampleResult({}, 0)
    cdf = np.cumsum(np.asarray(probs, dtype=np.float64))
    rng = np.random.Generator(np.random.Philox(key=seed))
    draws = rng.random(shots)
    indices = np.searchsorted(cdf, draws * cdf[-1], side="right")
    indices = np.minimum(indices, len(cdf) - 1)
    values, counts = np.unique(indices, return_counts=True)
    return SampleResult(
        {format(int(v), f"0{num_qubits}b"): int(c) for v, c in zip(values, counts)},
        shots)


def sample(state: StateVector, shots: int, seed: int) -> SampleResult:
    """shots i.i.d. draws from |amp|^2, keyed by bitstring with qubit 0 rightmost."""
    probs = state.probabilities()
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-4:
        raise ValueError(
            f"state norm deviates from 1 by {abs(total - 1.0):.2e}; "
            "refusing to sample from a corrupted state")
    return sample_from_probabilities(probs, shots, seed, state.num_qubits)


def state_fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, promoting both states to double precision."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"qubit counts differ: {a.num_qubits} vs {b.num_qubits}")
    overlap = np.vdot(a.amplitudes.astype(np.complex128),
                      b.amplitudes.astype(np.complex128))
    return float(abs(overlap) ** 2)
