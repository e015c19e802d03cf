"""Empirical engine selection: micro-benchmark, project full-circuit time, cache.

Each candidate engine runs a short H/CNOT workload at a capped qubit count;
the projected time for the real circuit is g / throughput + init overhead and
the minimum wins. Results are cached per (effective qubit count, engine-set
fingerprint) so repeat selections cost a dictionary lookup.
"""
from __future__ import annotations

import hashlib
import logging
import statistics
import threading
import time
from dataclasses import dataclass, field
from typing import Sequence

from .circuit import Circuit, GateKind, GateOp, Precision
from .engines import Engine, EngineId

log = logging.getLogger(__name__)


@dataclass
class BenchmarkConfig:
    # 8 H/CNOT pairs x 3 repetitions keeps cold profiling inside the 100 ms
    # budget on the reference engine at 16 benchmark qubits; larger counts
    # measurably blow the budget without changing the ranking.
    bench_gate_count: int = 8
    max_bench_qubits: int = 20
    overhead_budget: float = 0.1
    cache_ttl: float = 300.0
    repetitions: int = 3

    def __post_init__(self):
        if self.bench_gate_count < 1:
            raise ValueError("bench_gate_count must be >= 1")
        if self.max_bench_qubits < 2:
            raise ValueError("max_bench_qubits must be >= 2")


@dataclass(frozen=True)
class EngineProfile:
    engine: EngineId
    throughput: float       # gate applications per second at n_eff
    init_overhead: float    # seconds to allocate and initialize the state
    measured_at: float


@dataclass
class _CacheEntry:
    choice: EngineId
    profiles: list[EngineProfile]
    timestamp: float
    fingerprint: str


@dataclass
class SelectionCache:
    """TTL cache keyed by (n_eff, engine-set fingerprint); reads are lock-free."""

    entries: dict[tuple[int, str], _CacheEntry] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def lookup(self, key: tuple[int, str], ttl: float) -> _CacheEntry | None:
        entry = self.entries.get(key)
        if entry is None:
            return None
        if time.monotonic() - entry.timestamp > ttl:
            return None
        return entry

    def store(self, key: tuple[int, str], entry: _CacheEntry) -> None:
        with self._lock:
            self.entries[key] = entry


def engine_set_fingerprint(engines: Sequence[Engine | EngineId]) -> str:
    names = sorted(e.name if isinstance(e, Engine) else e.name for e in engines)
    return hashlib.sha256(",".join(names).encode()).hexdigest()[:16]


def _benchmark_ops(n_eff: int, pairs: int) -> list[GateOp]:
    ops: list[GateOp] = []
    for j in range(pairs):
        a = j % n_eff
        b = (j + 1) % n_eff
        ops.append(GateOp(GateKind.H, (a,)))
        ops.append(GateOp(GateKind.CNOT, (a, b)))
    return ops


def _profile_engine(engine: Engine, n_eff: int, config: BenchmarkConfig) -> EngineProfile:
    """Median-of-repetitions timing of the benchmark workload on one engine."""
    ops = _benchmark_ops(n_eff, config.bench_gate_count)
    alloc_times: list[float] = []
    run_times: list[float] = []
    for _ in range(config.repetitions):
        t0 = time.perf_counter()
        state = engine.init_state(n_eff, Precision.DOUBLE)
        alloc_times.append(time.perf_counter() - t0)
        try:
            t0 = time.perf_counter()
            for op in ops:
                engine.apply_gate(state, op)
            engine.synchronize()
            run_times.append(time.perf_counter() - t0)
        finally:
            engine.release(state)
    elapsed = statistics.median(run_times)
    gates_run = 2 * config.bench_gate_count  # each pair counts as two gates
    throughput = gates_run / elapsed if elapsed > 0 else float("inf")
    return EngineProfile(
        engine=engine.id,
        throughput=throughput,
        init_overhead=statistics.median(alloc_times),
        measured_at=time.monotonic(),
    )


def projected_time(gate_count: int, profile: EngineProfile) -> float:
    """Full-circuit time estimate: g / throughput + init overhead."""
    return gate_count / profile.throughput + profile.init_overhead


def select(circuit: Circuit, engines: Sequence[Engine],
           config: BenchmarkConfig | None = None,
           cache: SelectionCache | None = None) -> tuple[EngineId, list[EngineProfile]]:
    """Pick the engine minimizing projected execution time for this circuit.

    The reference engine must be among the candidates; it is the initial
    choice, so benchmark failures of other engines are never fatal. Failing
    engines are skipped with a log line.
    """
    if not engines:
        raise ValueError("no engines supplied")
    reference = next((e for e in engines if e.name == "reference"), None)
    if reference is None:
        raise ValueError("the reference engine must always be available as fallback")
    config = config or BenchmarkConfig()

    n_eff = max(2, min(circuit.num_qubits, config.max_bench_qubits))
    key = (n_eff, engine_set_fingerprint(engines))
    if cache is not None:
        entry = cache.lookup(key, config.cache_ttl)
        if entry is not None:
            return entry.choice, entry.profiles

    best = reference.id
    best_time = float("inf")
    gate_count = len(circuit.gates)
    profiles: list[EngineProfile] = []
    bench_start = time.perf_counter()
    for engine in engines:
        if engine.id.requires_accelerator and not engine.is_available():
            log.info("skipping engine %s: accelerator not available", engine.name)
            continue
        try:
            profile = _profile_engine(engine, n_eff, config)
        except Exception as exc:
            log.warning("skipping engine %s: benchmark failed (%s)", engine.name, exc)
            continue
        profiles.append(profile)
        t = projected_time(gate_count, profile)
        if t < best_time or (t == best_time and engine.name < best.name):
            best_time = t
            best = engine.id
    total = time.perf_counter() - bench_start
    if total > config.overhead_budget:
        log.info("profiling took %.1f ms (budget %.1f ms) at n_eff=%d",
                 total * 1e3, config.overhead_budget * 1e3, n_eff)

    if cache is not None:
        cache.store(key, _CacheEntry(best, profiles, time.monotonic(), key[1]))
    return best, profiles


def invalidate(cache: SelectionCache, reason: str, *,
               engines: Sequence[Engine] | None = None,
               ttl: float | None = None) -> None:
    """Drop cache entries: by stale fingerprint, by age, or all of them."""
    with cache._lock:
        if reason == "manual":
            cache.entries.clear()
        elif reason == "engine-set-changed":
            if engines is None:
                raise ValueError("engine-set-changed invalidation needs the current engines")
            current = engine_set_fingerprint(engines)
            stale = [k for k, e in cache.entries.items() if e.fingerprint != current]
            for k in stale:
                del cache.entries[k]
        elif reason == "ttl-expired":
            limit = ttl if ttl is not None else BenchmarkConfig().cache_ttl
            now = time.monotonic()
            stale = [k for k, e in cache.entries.items() if now - e.timestamp > limit]
            for k in stale:
                del cache.entries[k]
        else:
            raise ValueError(f"unknown invalidation reason {reason!r}")
