"""Acceptance suite: one test per shipped criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; tolerances are pinned here and nowhere else.
"""
import functools
import itertools
import json
import statistics
import time

import numpy as np
import pytest

from aqsim.circuit import Circuit, Precision
from aqsim.dag import fuse
from aqsim.engines import get_engine, run_circuit, state_fidelity
from aqsim.generators import (ansatz_circuit, bell_circuit, ghz_circuit,
                              qft_circuit, random_su2_circuit)
from aqsim.memory import (GIB, MIB, MemoryModelParams, ScriptedTraceProbe,
                          check_feasible, estimate_memory, run_with_fallback,
                          should_fallback)
from aqsim.noise import (evolve_noisy, measure_distribution, metrics,
                         statevector_distribution)
from aqsim.precision import select_precision
from aqsim.qasm import SourceFormat, parse, to_json
from aqsim.selector import BenchmarkConfig, SelectionCache, select
from conftest import circuits_structurally_equal, oracle_state, random_circuit
from test_qasm import DATA, GOLDEN_ERRORS, GOLDEN_VALID
from test_selector import StubEngine

ENGINES = ("reference", "parallel")


def criterion(number, summary):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\n[acceptance] criterion {number}: FAIL - {summary}")
                raise
            print(f"\n[acceptance] criterion {number}: PASS - {summary}")
        return wrapper
    return decorate


@criterion(1, "engines match the full-matrix oracle on 200 random circuits")
def test_c01_correctness_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    for _ in range(200):
        n = int(rng.integers(1, 7))
        g = int(rng.integers(1, 61))
        circuit = random_circuit(rng, n, g)
        expected = oracle_state(circuit)
        for name in ENGINES:
            state = run_circuit(name, circuit, Precision.DOUBLE)
            assert np.max(np.abs(state.amplitudes - expected)) <= 1e-10
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"oracle sweep took {elapsed:.1f} s"


@criterion(2, "fusion preserves semantics on 100 random circuits and collapses chains")
def test_c02_fusion_semantic_preservation():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    for _ in range(100):
        n = int(rng.integers(2, 11))
        g = int(rng.integers(1, 301))
        circuit = random_circuit(rng, n, g)
        width = int(rng.integers(1, 3))
        fused, _ = fuse(circuit, width)
        original = run_circuit("reference", circuit, Precision.DOUBLE)
        optimized = run_circuit("reference", fused, Precision.DOUBLE)
        assert state_fidelity(original, optimized) >= 1 - 1e-10
    for k in range(2, 65):
        chain = random_su2_circuit(1, k, seed=k)
        _, report = fuse(chain, 2)
        assert report.fused_gate_count == 1, k
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"fusion sweep took {elapsed:.1f} s"


@criterion(3, "built-in generators achieve >= 25% depth reduction at width 2")
def test_c03_fusion_depth_trend():
    # reference points: the corresponding published reductions are 34.3%
    # (QFT-20), 34.0% (Random-20), 38.1% (ansatz); exact figures depend on
    # generator details, so only the 25% floor is asserted
    cases = {
        "qft-20": qft_circuit(20),
        "random-20": random_su2_circuit(20, 400, seed=42),
        "ansatz-20": ansatz_circuit(20, layers=4, seed=42),
    }
    for name, circuit in cases.items():
        _, report = fuse(circuit, 2)
        assert report.reduction_percent >= 25.0, (name, report.reduction_percent)


@criterion(4, "measured-counts analysis reproduces 0.939 and 0.853")
def test_c04_counts_analysis_exactness(tmp_path, capsys):
    from aqsim.cli import main
    bell = tmp_path / "bell_counts.json"
    bell.write_text(json.dumps(
        {"shots": 4096, "counts": {"00": 2017, "11": 1828, "10": 160, "01": 91}}))
    ghz5 = tmp_path / "ghz5_counts.json"
    ghz5.write_text(json.dumps(
        {"shots": 4096,
         "counts": {"00000": 1813, "11111": 1679, "11110": 143, "00001": 121,
                    "01111": 115, "10000": 111, "00011": 114}}))
    assert main(["analyze-counts", str(bell), "--support", "00,11"]) == 0
    bell_value = float(capsys.readouterr().out)
    assert main(["analyze-counts", str(ghz5), "--support", "00000,11111"]) == 0
    ghz_value = float(capsys.readouterr().out)
    assert abs(bell_value - 0.939) <= 0.001
    assert abs(ghz_value - 0.853) <= 0.001


@criterion(5, "precision controller reproduces the deep-circuit bound and is monotone")
def test_c05_precision_controller():
    decision = select_precision(20, 200, 1e-4)
    assert 24.0 <= decision.estimated_error_single <= 26.0
    assert decision.chosen is Precision.DOUBLE
    tol = 1e-2
    single = {(n, g): select_precision(n, g, tol).chosen is Precision.SINGLE
              for n in range(1, 21) for g in range(0, 40, 2)}
    for (n, g), is_single in single.items():
        if is_single:
            assert all(single[(m, h)] for m in range(1, n + 1)
                       for h in range(0, g + 1, 2))


@criterion(6, "memory model reproduces 16 GiB / 4 GiB and the feasibility scenarios")
def test_c06_memory_model():
    state_only = MemoryModelParams(s_prec=16, g_max=0, q_max=0,
                                   workspace_bytes=0, reserve_bytes=512 * MIB)
    assert estimate_memory(30, state_only) == 16 * GIB == 17_179_869_184
    assert estimate_memory(28, state_only) == 4 * GIB
    probe_16gib = ScriptedTraceProbe([(0.0, 16 * GIB)])

    # pre-simulation scenario: the 30-qubit state cannot fit, trigger at gate 0
    result_30 = check_feasible(30, state_only, probe_16gib)
    assert not result_30.feasible
    engine = StubEngine("reference")
    from aqsim.memory import MemoryGovernor
    governor = MemoryGovernor(
        MemoryModelParams(s_prec=16, g_max=0, q_max=0, workspace_bytes=0,
                          reserve_bytes=16 * GIB),
        ScriptedTraceProbe([(float(i), 8 * GIB) for i in range(64)]))
    _, events = run_with_fallback(random_su2_circuit(6, 10, seed=6),
                                  StubEngine("primary"), get_engine("reference"),
                                  governor=governor)
    assert [e.gate_index for e in events] == [0]

    # 24-qubit scenario: fits in 16 GiB with the full overhead model
    full = MemoryModelParams(s_prec=16, g_max=4, q_max=2,
                             workspace_bytes=64 * MIB, reserve_bytes=512 * MIB)
    assert check_feasible(24, full, ScriptedTraceProbe([(0.0, 16 * GIB)])).feasible

    # no-fallback scenario: ample scripted trace, no events
    ample = ScriptedTraceProbe([(float(i), 8 * GIB) for i in range(600)])
    governor = MemoryGovernor(MemoryModelParams(reserve_bytes=512 * MIB), ample)
    _, events = run_with_fallback(random_su2_circuit(8, 60, seed=8),
                                  get_engine("parallel"), get_engine("reference"),
                                  governor=governor)
    assert events == []


@criterion(7, "forced fallback preserves the state exactly; trigger is sound")
def test_c07_fallback_state_preservation():
    rng = np.random.default_rng(707)
    circuit = random_circuit(rng, 16, 200, allow_custom=False)
    parallel = get_engine("parallel")
    reference = get_engine("reference")
    uninterrupted = parallel.run_circuit(circuit, Precision.DOUBLE)
    indices = sorted(int(i) for i in rng.choice(200, size=10, replace=False))
    for k in indices:
        state, events = run_with_fallback(circuit, parallel, reference,
                                          Precision.DOUBLE, force_fallback_at=k)
        assert [e.gate_index for e in events] == [k]
        assert np.array_equal(state.amplitudes, uninterrupted.amplitudes), k

    reserve = MemoryModelParams(reserve_bytes=512 * MIB)
    for rate_gib in (0.1, 0.5, 2.0):
        rows = [(float(t), int(6 * GIB - rate_gib * GIB * t)) for t in range(16)]
        probe = ScriptedTraceProbe(rows)
        breach = next((i for i, (_, b) in enumerate(rows)
                       if b < reserve.reserve_bytes), None)
        fired = None
        for i in range(len(rows)):
            probe.sample()
            if fired is None and should_fallback(probe, reserve, horizon=1.0):
                fired = i
        if breach is not None:
            assert fired is not None and fired <= breach


@criterion(8, "selector returns the projected-time argmin; warm cache skips benchmarks")
def test_c08_selector_correctness():
    # rigged delays separated by >= 10x so scheduler jitter cannot flip the
    # argmin; median-of-3 repetitions on top of that
    config = BenchmarkConfig(bench_gate_count=2, max_bench_qubits=4,
                             repetitions=3)
    circuit = Circuit(4, random_su2_circuit(4, 30, seed=88).gates)
    engines = {
        "reference": lambda: StubEngine("reference", gate_delay=0.003),
        "quick": lambda: StubEngine("quick", gate_delay=0.0002),
        "slow": lambda: StubEngine("slow", gate_delay=0.008),
    }
    for order in itertools.permutations(engines):
        built = {name: engines[name]() for name in order}
        chosen, _ = select(circuit, [built[name] for name in order], config)
        assert chosen.name == "quick", order

    cache = SelectionCache()
    warm_engines = [StubEngine("reference", gate_delay=0.004),
                    StubEngine("quick", gate_delay=0.0002)]
    select(circuit, warm_engines, config, cache)
    for engine in warm_engines:
        engine.bench_gate_calls = 0
    for _ in range(3):
        chosen, _ = select(circuit, warm_engines, config, cache)
        assert chosen.name == "quick"
    assert all(engine.bench_gate_calls == 0 for engine in warm_engines)

    t0 = time.perf_counter()
    select(random_su2_circuit(16, 64, seed=16),
           [get_engine("reference")], BenchmarkConfig(max_bench_qubits=16))
    cold_ms = (time.perf_counter() - t0) * 1e3
    verdict = "within" if cold_ms <= 100.0 else "OVER"
    print(f"\n[acceptance] criterion 8 soft check: cold reference profiling "
          f"{cold_ms:.1f} ms ({verdict} the 100 ms budget, logged not asserted)")


@criterion(9, "noise module is consistent at p=0, trend-monotone, and hits 0.987")
def test_c09_noise_module():
    builtins = [bell_circuit(), ghz_circuit(3), ghz_circuit(5), qft_circuit(4),
                random_su2_circuit(5, 30, seed=21), ansatz_circuit(4, 2, seed=8)]
    for circuit in builtins:
        rho = evolve_noisy(circuit, 0.0, check_steps=True)
        state = run_circuit("reference", circuit, Precision.DOUBLE)
        assert np.max(np.abs(rho.diagonal_probabilities()
                             - state.probabilities())) <= 1e-10

    ps = [0.0, 0.001, 0.01, 0.05]
    widths = [2, 3, 4, 5]
    fcl = {}
    for k in widths:
        circuit = bell_circuit() if k == 2 else ghz_circuit(k)
        ideal = statevector_distribution(
            run_circuit("reference", circuit, Precision.DOUBLE))
        for p in ps:
            rho = evolve_noisy(circuit, p, check_steps=True)
            fcl[(k, p)] = metrics(measure_distribution(rho),
                                  ideal).classical_fidelity
    for k in widths:
        for lo, hi in zip(ps, ps[1:]):
            assert fcl[(k, hi)] <= fcl[(k, lo)] + 1e-12
    for p in ps:
        for lo, hi in zip(widths, widths[1:]):
            assert fcl[(hi, p)] <= fcl[(lo, p)] + 1e-12
    assert abs(fcl[(2, 0.01)] - 0.987) <= 0.02


@criterion(10, "reference scales exponentially; parallel is not slower at n=18")
def test_c10_scaling_shape():
    sizes = (14, 16, 18)
    workloads = {n: random_su2_circuit(n, 10 * n, seed=1000 + n) for n in sizes}
    reference = get_engine("reference")
    parallel = get_engine("parallel")

    def timed(engine, circuit):
        t0 = time.perf_counter()
        engine.run_circuit(circuit, Precision.DOUBLE)
        return time.perf_counter() - t0

    # warm both engines at the largest size before measuring
    timed(reference, workloads[18])
    timed(parallel, workloads[18])
    ref_times = {n: [] for n in sizes}
    par_18 = []
    for _ in range(5):  # round-robin so load drift hits all cells equally
        for n in sizes:
            ref_times[n].append(timed(reference, workloads[n]))
        par_18.append(timed(parallel, workloads[18]))
    ref = {n: statistics.median(ts) for n, ts in ref_times.items()}
    par = statistics.median(par_18)
    r_16_14 = ref[16] / ref[14]
    r_18_16 = ref[18] / ref[16]
    print(f"\n[acceptance] criterion 10 data: T16/T14={r_16_14:.2f} "
          f"T18/T16={r_18_16:.2f} ref18={ref[18] * 1e3:.0f}ms "
          f"par18={par * 1e3:.0f}ms")
    assert 3.0 <= r_16_14 <= 6.0, r_16_14
    assert 3.0 <= r_18_16 <= 6.0, r_18_16
    assert par <= ref[18], (par, ref[18])


@criterion(11, "golden parser corpus and 1e-15 JSON round-trip hold")
def test_c11_parser():
    assert len(GOLDEN_VALID) + len(GOLDEN_ERRORS) >= 20
    for name, (qubits, kinds) in GOLDEN_VALID.items():
        circuit = parse((DATA / name).read_text())
        assert circuit.num_qubits == qubits
        assert [g.kind for g in circuit.gates] == kinds
    for name, expected_kind in GOLDEN_ERRORS.items():
        from aqsim.qasm import ParseFailure
        with pytest.raises(ParseFailure) as exc_info:
            parse((DATA / name).read_text())
        assert any(e.kind == expected_kind for e in exc_info.value.errors)
    rng = np.random.default_rng(1111)
    for _ in range(100):
        circuit = random_circuit(rng, int(rng.integers(1, 7)),
                                 int(rng.integers(0, 25)))
        back = parse(to_json(circuit), SourceFormat.JSON)
        assert circuits_structurally_equal(circuit, back, tol=1e-15)
