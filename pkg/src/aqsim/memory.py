"""Memory model, availability probes, predictive fallback trigger, and migration.

The governor estimates the bytes a simulation needs, compares against probe
readings (raw available memory; the reserve margin is subtracted here), and
watches a sliding window of readings to trigger migration *before* memory is
exhausted, by linear extrapolation over a prediction horizon.

Probes are pluggable: a host probe reads process-visible available memory,
and a scripted-trace probe replays a CSV of (t_seconds, available_bytes)
rows for deterministic tests. The executing engine polls the governor
between gate applications (a running kernel cannot be migrated, so the gate
boundary is the checkpoint), and migration moves the amplitude buffer
bit-identically to the destination engine.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Precision, StateVector
from .engines import Engine

log = logging.getLogger(__name__)

MIB = 1 << 20
GIB = 1 << 30

DEFAULT_WINDOW = 16
DEFAULT_POLL_INTERVAL = 0.05
DEFAULT_HORIZON = 1.0


@dataclass
class MemoryModelParams:
    """Constants of the resident-set estimate for an n-qubit simulation."""

    s_prec: int = 16                      # bytes per complex amplitude
    g_max: int = 4                        # max simultaneously resident gate matrices
    q_max: int = 2                        # max gate width in the circuit
    workspace_bytes: int = 64 * MIB       # calibration constant for secondary allocations
    reserve_bytes: int = 512 * MIB        # safety margin against transient allocations

    def __post_init__(self):
        for name in ("s_prec", "g_max", "q_max", "workspace_bytes", "reserve_bytes"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def for_circuit(cls, circuit: Circuit, precision: Precision,
                    **overrides) -> "MemoryModelParams":
        return cls(s_prec=precision.amplitude_bytes,
                   q_max=circuit.max_gate_width(), **overrides)


def estimate_memory(num_qubits: int, params: MemoryModelParams) -> int:
    """Bytes needed: state vector + resident gate matrices + workspace."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    state = (1 << num_qubits) * params.s_prec
    matrices = params.g_max * (1 << params.q_max) ** 2 * params.s_prec
    return state + matrices + params.workspace_bytes


class ProbeError(Exception):
    """A probe could not produce a reading."""


class MemoryProbe:
    """Base probe: sample() appends (timestamp, available_bytes) to the window."""

    def __init__(self, poll_interval: float = DEFAULT_POLL_INTERVAL,
                 window_size: int = DEFAULT_WINDOW):
        self.poll_interval = poll_interval
        self.window: deque[tuple[float, int]] = deque(maxlen=window_size)

    def _read(self) -> tuple[float, int]:
        raise NotImplementedError

    def sample(self) -> tuple[float, int]:
        reading = self._read()
        self.window.append(reading)
        return reading

    def latest(self) -> tuple[float, int] | None:
        return self.window[-1] if self.window else None

    def readings(self) -> list[tuple[float, int]]:
        return list(self.window)


class ScriptedTraceProbe(MemoryProbe):
    """Replays a fixed (t_seconds, available_bytes) trace; holds the last row
    once exhausted. Every sample() consumes one row, so tests are deterministic
    per checkpoint regardless of wall-clock time."""

    def __init__(self, rows: list[tuple[float, int]], **kwargs):
        super().__init__(**kwargs)
        if not rows:
            raise ValueError("scripted trace needs at least one row")
        self._rows = [(float(t), int(b)) for t, b in rows]
        self._cursor = 0

    @classmethod
    def from_csv(cls, text: str, **kwargs) -> "ScriptedTraceProbe":
        rows = []
        for record in csv.reader(io.StringIO(text)):
            if not record or record[0].lstrip().startswith("#"):
                continue
            rows.append((float(record[0]), int(float(record[1]))))
        return cls(rows, **kwargs)

    @classmethod
    def from_file(cls, path: str, **kwargs) -> "ScriptedTraceProbe":
        with open(path) as fh:
            return cls.from_csv(fh.read(), **kwargs)

    def _read(self) -> tuple[float, int]:
        row = self._rows[min(self._cursor, len(self._rows) - 1)]
        self._cursor += 1
        return row


class HostMemoryProbe(MemoryProbe):
    """Available host memory via psutil, throttled to the poll interval."""

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self._last_poll = -float("inf")

    def _read(self) -> tuple[float, int]:
        try:
            import psutil
            return time.monotonic(), int(psutil.virtual_memory().available)
        except Exception as exc:  # pragma: no cover - environment dependent
            raise ProbeError(f"host memory query failed: {exc}") from exc

    def sample(self) -> tuple[float, int]:
        now = time.monotonic()
        if self.window and now - self._last_poll < self.poll_interval:
            return self.window[-1]
        self._last_poll = now
        return super().sample()


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    required_bytes: int
    available_bytes: int | None
    deficit_bytes: int
    reason: str = ""


def check_feasible(num_qubits: int, params: MemoryModelParams,
                   probe: MemoryProbe) -> Feasibility:
    """Feasible iff the estimate fits in (available - reserve); boundary inclusive.

    An unreadable probe is treated as infeasible: running blind risks an
    unrecoverable out-of-memory failure.
    """
    required = estimate_memory(num_qubits, params)
    try:
        reading = probe.latest() or probe.sample()
    except ProbeError as exc:
        return Feasibility(False, required, None, required, f"probe unavailable: {exc}")
    available = reading[1]
    effective = available - params.reserve_bytes
    if required <= effective:
        return Feasibility(True, required, available, 0)
    return Feasibility(False, required, available, required - effective)


def _window_slope(readings: list[tuple[float, int]]) -> float:
    """Least-squares slope (bytes/second) of the probe window."""
    ts = np.array([r[0] for r in readings], dtype=float)
    ys = np.array([r[1] for r in readings], dtype=float)
    if np.ptp(ts) == 0.0:
        return 0.0
    return float(np.polyfit(ts, ys, 1)[0])


def should_fallback(probe: MemoryProbe, params: MemoryModelParams,
                    horizon: float = DEFAULT_HORIZON) -> bool:
    """True iff available memory, extrapolated over the horizon, drops below reserve.

    With fewer than two readings the slope is undefined and only the latest
    reading is compared against the reserve.
    """
    readings = probe.readings()
    if not readings:
        return False
    latest = readings[-1][1]
    if len(readings) < 2:
        return latest < params.reserve_bytes
    slope = _window_slope(readings)
    projected = latest + slope * horizon
    return projected < params.reserve_bytes


@dataclass
class FallbackEvent:
    qubit_count: int
    gate_index: int
    measured_available: int
    transfer_seconds: float
    reinit_seconds: float

    def to_json_line(self) -> str:
        return json.dumps({
            "event": "fallback",
            "qubits": self.qubit_count,
            "gate_index": self.gate_index,
            "available": self.measured_available,
            "transfer_s": self.transfer_seconds,
            "reinit_s": self.reinit_seconds,
        })


class FallbackError(Exception):
    """Both the source and destination engines cannot hold the state."""

    def __init__(self, source_deficit: int, destination_deficit: int):
        self.source_deficit = source_deficit
        self.destination_deficit = destination_deficit
        super().__init__(
            f"fallback impossible: source short {source_deficit} bytes, "
            f"destination short {destination_deficit} bytes")


def predict_transfer_seconds(num_qubits: int, s_prec: int,
                             bandwidth_bytes_per_s: float) -> float:
    """State-transfer time estimate: 2^n * s_prec / effective bandwidth."""
    return (1 << num_qubits) * s_prec / bandwidth_bytes_per_s


def execute_fallback(state: StateVector, source: Engine, destination: Engine, *,
                     gate_index: int = 0, measured_available: int = 0,
                     source_deficit: int = 0) -> tuple[StateVector, FallbackEvent]:
    """Three-step migration: copy the state out, switch engines, free the source.

    The amplitude buffer is copied verbatim, so the migrated state is
    bit-identical; the event records measured transfer and reinit timings.
    """
    required = state.amplitudes.nbytes
    if destination.capacity_bytes is not None and required > destination.capacity_bytes:
        raise FallbackError(source_deficit, required - destination.capacity_bytes)

    t0 = time.perf_counter()
    migrated = np.array(state.amplitudes, copy=True)   # step 1: state transfer
    transfer_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    new_state = destination.adopt(state.num_qubits, state.precision, migrated)  # step 2
    source.release(state)                                                       # step 3
    reinit_seconds = time.perf_counter() - t0

    event = FallbackEvent(
        qubit_count=state.num_qubits,
        gate_index=gate_index,
        measured_available=measured_available,
        transfer_seconds=transfer_seconds,
        reinit_seconds=reinit_seconds,
    )
    log.info("%s", event.to_json_line())
    return new_state, event


@dataclass
class MemoryGovernor:
    """Bundles the model parameters, probe, and horizon for a governed run."""

    params: MemoryModelParams
    probe: MemoryProbe
    horizon: float = DEFAULT_HORIZON


class _FallbackSignal(Exception):
    def __init__(self, state: StateVector, gate_index: int):
        self.state = state
        self.gate_index = gate_index


def run_with_fallback(circuit: Circuit, engine: Engine, fallback_engine: Engine,
                      precision: Precision = Precision.DOUBLE,
                      governor: MemoryGovernor | None = None,
                      force_fallback_at: int | None = None,
                      ) -> tuple[StateVector, list[FallbackEvent]]:
    """Run on `engine`, migrating to `fallback_engine` if memory pressure demands.

    The governor's pre-simulation feasibility check redirects the whole run
    (gate index 0); the predictive trigger fires between gates. A forced
    fallback index exercises migration deterministically in tests. The final
    state is identical to an uninterrupted run because both engines share
    bit-identical kernels.
    """
    events: list[FallbackEvent] = []
    n = circuit.num_qubits

    if governor is not None:
        feasibility = check_feasible(n, governor.params, governor.probe)
        if not feasibility.feasible and force_fallback_at is None:
            t0 = time.perf_counter()
            state = fallback_engine.run_circuit(circuit, precision)
            event = FallbackEvent(
                qubit_count=n, gate_index=0,
                measured_available=feasibility.available_bytes or 0,
                transfer_seconds=0.0,
                reinit_seconds=time.perf_counter() - t0)
            log.info("%s", event.to_json_line())
            return state, [event]

    def checkpoint(state: StateVector, i: int) -> None:
        if force_fallback_at is not None and i == force_fallback_at:
            raise _FallbackSignal(state, i)
        if governor is not None and i > 0:
            governor.probe.sample()
            if should_fallback(governor.probe, governor.params, governor.horizon):
                raise _FallbackSignal(state, i)

    try:
        state = engine.run_circuit(circuit, precision, checkpoint=checkpoint)
        return state, events
    except _FallbackSignal as signal:
        latest = governor.probe.latest() if governor is not None else None
        state, event = execute_fallback(
            signal.state, engine, fallback_engine,
            gate_index=signal.gate_index,
            measured_available=latest[1] if latest else 0)
        events.append(event)
        for op in circuit.gates[signal.gate_index:]:
            fallback_engine.apply_gate(state, op)
        fallback_engine.synchronize()
        return state, events
