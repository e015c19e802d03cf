"""Benchmark CLI: parse -> fuse -> precision -> select -> execute, plus report tables.

Subcommands:
  run             full pipeline on one circuit file, JSON report
  bench-scaling   median execution time per (qubit count, engine), CSV
  bench-fusion    depth reduction and timing per circuit, CSV
  noise-compare   classical fidelity / TVD of noisy GHZ families, CSV
  analyze-counts  correct-outcome probability of a measured counts file
  select-engine   run the empirical engine selection and show profiles

Exit codes: 0 ok, 1 usage, 2 parse/validation failure, 3 infeasible.
"""
from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
import time
from dataclasses import asdict

import numpy as np

from . import dag, generators, memory, noise, qasm, selector
from .circuit import Circuit, Precision
from .engines import (get_engine, registered_engines, sample,
                      sample_from_probabilities, state_fidelity)
from .precision import DEFAULT_TOLERANCE, select_precision

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3

# Published schema for the `run` report (JSON Schema draft 2020-12 subset).
REPORT_SCHEMA = {
    "type": "object",
    "required": [
        "circuit_name", "n", "g_original", "g_fused", "depth_before",
        "depth_after", "precision_chosen", "engine_chosen", "wall_seconds",
        "fidelity_vs_reference", "fallback_events", "counts", "seed",
    ],
    "properties": {
        "circuit_name": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "g_original": {"type": "integer", "minimum": 0},
        "g_fused": {"type": "integer", "minimum": 0},
        "depth_before": {"type": "integer", "minimum": 0},
        "depth_after": {"type": "integer", "minimum": 0},
        "precision_chosen": {"enum": ["single", "double"]},
        "engine_chosen": {"type": "string"},
        "wall_seconds": {
            "type": "object",
            "required": ["parse", "fuse", "precision", "select", "execute", "sample"],
            "additionalProperties": {"type": "number", "minimum": 0},
        },
        "fidelity_vs_reference": {"type": ["number", "null"]},
        "fallback_events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["qubit_count", "gate_index", "measured_available",
                             "transfer_seconds", "reinit_seconds"],
            },
        },
        "counts": {"type": ["object", "null"]},
        "seed": {"type": ["integer", "null"]},
    },
    "additionalProperties": False,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for generators and sampling")
    p.add_argument("--no-timing", action="store_true",
                   help="zero all time columns for byte-stable output")
    p.add_argument("--output", default=None, help="write output here instead of stdout")
    p.add_argument("--format", choices=["csv", "json"], default="csv",
                   help="table output format (table-emitting subcommands only)")


def build_parser() -> _Parser:
    parser = _Parser(prog="aqsim", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", action="store_true", help="log to stderr at INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline on a circuit file")
    run.add_argument("circuit", help="path to a .qasm or .json circuit, or a generator "
                                     "spec like ghz-5 / qft-8 / random-10-100")
    run.add_argument("--engine", default="auto",
                     help="engine name or 'auto' for empirical selection")
    run.add_argument("--precision", choices=["auto", "single", "double"], default="auto")
    run.add_argument("--precision-tol", type=float, default=DEFAULT_TOLERANCE)
    run.add_argument("--no-fuse", action="store_true", help="skip the fusion pass")
    run.add_argument("--fuse-width", type=int, default=2, choices=[1, 2, 3])
    run.add_argument("--shots", type=int, default=0)
    run.add_argument("--verify", action="store_true",
                     help="also run the reference engine and report fidelity")
    run.add_argument("--memory-trace", default=None,
                     help="CSV file of t_seconds,available_bytes probe readings")
    run.add_argument("--memory-reserve", type=int, default=512 * memory.MIB)
    run.add_argument("--memory-horizon", type=float, default=memory.DEFAULT_HORIZON)
    run.add_argument("--save-state", default=None, help="write final amplitudes (.npy)")
    _add_common(run)

    scaling = sub.add_parser("bench-scaling", help="execution time vs qubit count")
    scaling.add_argument("--qubits", default="10,12,14",
                         help="comma-separated qubit counts")
    scaling.add_argument("--gates-per-qubit", type=int, default=10)
    scaling.add_argument("--engines", default="reference,parallel")
    scaling.add_argument("--repetitions", type=int, default=3)
    _add_common(scaling)

    fusion = sub.add_parser("bench-fusion", help="fusion depth reduction per circuit")
    fusion.add_argument("--circuits", default="qft-20,random-20,ansatz-20",
                        help="comma-separated generator specs or file paths")
    fusion.add_argument("--fuse-width", type=int, default=2, choices=[1, 2, 3])
    fusion.add_argument("--engine", default="reference")
    fusion.add_argument("--repetitions", type=int, default=1)
    fusion.add_argument("--no-exec", action="store_true",
                        help="skip execution timing (time columns become 0)")
    _add_common(fusion)

    noise_cmd = sub.add_parser("noise-compare", help="noisy GHZ fidelity/TVD table")
    noise_cmd.add_argument("--widths", default="2,3,4,5")
    noise_cmd.add_argument("--p-values", default="0.0,0.001,0.01")
    noise_cmd.add_argument("--shots", type=int, default=8192)
    _add_common(noise_cmd)

    counts_cmd = sub.add_parser("analyze-counts",
                                help="correct-outcome probability of a counts file")
    counts_cmd.add_argument("counts_file")
    counts_cmd.add_argument("--support", required=True,
                            help="comma-separated ideal bitstrings, e.g. 00,11")
    _add_common(counts_cmd)

    select_cmd = sub.add_parser("select-engine", help="empirical engine selection")
    select_cmd.add_argument("circuit", help="circuit file or generator spec")
    select_cmd.add_argument("--bench-gates", type=int, default=None,
                            help="benchmark H/CNOT pair count")
    select_cmd.add_argument("--bench-max-qubits", type=int, default=None)
    select_cmd.add_argument("--cache-ttl", type=float, default=None)
    _add_common(select_cmd)

    return parser


def _load_circuit(spec: str, seed: int) -> Circuit:
    """File path (by extension) or generator spec."""
    if spec.endswith(".json") or spec.endswith(".qasm"):
        with open(spec) as fh:
            text = fh.read()
        fmt = qasm.SourceFormat.JSON if spec.endswith(".json") else qasm.SourceFormat.QASM2_SUBSET
        circuit = qasm.parse(text, fmt)
        if not circuit.name:
            circuit.name = spec.rsplit("/", 1)[-1]
        return circuit
    return generators.builtin_circuit(spec, seed)


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table_text(header: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "json":
        docs = [dict(zip(header, row)) for row in rows]
        return json.dumps(docs, indent=2, sort_keys=True) + "\n"
    lines = [",".join(header)]
    lines += [",".join(str(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


# Process-lifetime selection cache shared by auto runs.
_CLI_CACHE = selector.SelectionCache()


def cmd_run(args) -> int:
    timings = {"parse": 0.0, "fuse": 0.0, "precision": 0.0,
               "select": 0.0, "execute": 0.0, "sample": 0.0}

    t0 = time.perf_counter()
    try:
        circuit = _load_circuit(args.circuit, args.seed)
    except qasm.ParseFailure as exc:
        for err in exc.errors:
            print(f"{args.circuit}:{err.render()}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    timings["parse"] = time.perf_counter() - t0

    depth_before = dag.depth(circuit)
    if args.no_fuse:
        fused, depth_after = circuit, depth_before
    else:
        t0 = time.perf_counter()
        fused, fusion_report = dag.fuse(circuit, args.fuse_width)
        timings["fuse"] = time.perf_counter() - t0
        depth_after = fusion_report.fused_depth

    t0 = time.perf_counter()
    if args.precision == "auto":
        decision = select_precision(fused.num_qubits, len(fused.gates),
                                    args.precision_tol)
        precision = decision.chosen
        log.info("precision auto: %s", decision.rationale)
    else:
        precision = Precision.SINGLE if args.precision == "single" else Precision.DOUBLE
    timings["precision"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if args.engine == "auto":
        engine_id, _profiles = selector.select(fused, registered_engines(),
                                               cache=_CLI_CACHE)
        engine = get_engine(engine_id.name)
    else:
        try:
            engine = get_engine(args.engine)
        except KeyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    timings["select"] = time.perf_counter() - t0

    params = memory.MemoryModelParams.for_circuit(
        fused, precision, reserve_bytes=args.memory_reserve)
    if args.memory_trace:
        probe = memory.ScriptedTraceProbe.from_file(args.memory_trace)
    else:
        probe = memory.HostMemoryProbe()
    governor = memory.MemoryGovernor(params, probe, args.memory_horizon)

    reference = get_engine("reference")
    t0 = time.perf_counter()
    try:
        if engine.name == "reference":
            feasibility = memory.check_feasible(fused.num_qubits, params, probe)
            if not feasibility.feasible:
                print(f"infeasible: need {feasibility.required_bytes} bytes, "
                      f"available {feasibility.available_bytes}", file=sys.stderr)
                return EXIT_INFEASIBLE
            state = reference.run_circuit(fused, precision)
            events = []
        else:
            state, events = memory.run_with_fallback(
                fused, engine, reference, precision, governor)
    except memory.FallbackError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    timings["execute"] = time.perf_counter() - t0

    counts = None
    if args.shots > 0:
        t0 = time.perf_counter()
        counts = sample(state, args.shots, args.seed).counts
        timings["sample"] = time.perf_counter() - t0

    fidelity = None
    if args.verify:
        ref_state = reference.run_circuit(fused, precision)
        fidelity = state_fidelity(ref_state, state)

    if args.save_state:
        np.save(args.save_state, state.amplitudes)

    if args.no_timing:
        timings = {k: 0.0 for k in timings}
    report = {
        "circuit_name": circuit.name or args.circuit,
        "n": circuit.num_qubits,
        "g_original": len(circuit.gates),
        "g_fused": len(fused.gates),
        "depth_before": depth_before,
        "depth_after": depth_after,
        "precision_chosen": precision.value,
        "engine_chosen": engine.name,
        "wall_seconds": timings,
        "fidelity_vs_reference": fidelity,
        "fallback_events": [asdict(e) for e in events],
        "counts": counts,
        "seed": args.seed,
    }
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


def cmd_bench_scaling(args) -> int:
    try:
        qubit_list = [int(x) for x in args.qubits.split(",") if x]
        engines = [get_engine(name.strip()) for name in args.engines.split(",") if name]
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    probe = memory.HostMemoryProbe()
    rows = []
    for n in qubit_list:
        params = memory.MemoryModelParams(s_prec=16, q_max=1)
        feasibility = memory.check_feasible(n, params, probe)
        if not feasibility.feasible:
            print(f"skipping n={n}: needs {feasibility.required_bytes} bytes, "
                  f"available {feasibility.available_bytes}", file=sys.stderr)
            continue
        gates = args.gates_per_qubit * n
        circuit = generators.random_su2_circuit(n, gates, args.seed + n)
        ref_state = get_engine("reference").run_circuit(circuit)
        for engine in engines:
            times = []
            state = None
            for _ in range(args.repetitions):
                t0 = time.perf_counter()
                state = engine.run_circuit(circuit)
                times.append(time.perf_counter() - t0)
            median_s = 0.0 if args.no_timing else statistics.median(times)
            fidelity = state_fidelity(ref_state, state)
            rows.append([n, gates, engine.name, f"{median_s:.6f}", f"{fidelity:.6f}"])
    text = _table_text(["n", "gates", "engine", "median_s", "fidelity_vs_reference"],
                       rows, args.format)
    _emit(text, args.output)
    return EXIT_OK


def cmd_bench_fusion(args) -> int:
    specs = [s.strip() for s in args.circuits.split(",") if s.strip()]
    engine = get_engine(args.engine)
    rows = []
    for spec in specs:
        try:
            circuit = _load_circuit(spec, args.seed)
        except qasm.ParseFailure as exc:
            for err in exc.errors:
                print(f"{spec}:{err.render()}", file=sys.stderr)
            return EXIT_PARSE
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        fused, report = dag.fuse(circuit, args.fuse_width)

        def _median_run(target: Circuit) -> float:
            times = []
            for _ in range(args.repetitions):
                t0 = time.perf_counter()
                engine.run_circuit(target)
                times.append(time.perf_counter() - t0)
            return statistics.median(times)

        if args.no_exec or args.no_timing:
            time_s = fused_time_s = 0.0
        else:
            time_s = _median_run(circuit)
            fused_time_s = _median_run(fused)
        rows.append([
            circuit.name or spec,
            report.original_depth,
            report.fused_depth,
            f"{report.reduction_percent:.1f}",
            f"{time_s:.6f}",
            f"{fused_time_s:.6f}",
        ])
    text = _table_text(
        ["circuit", "original_depth", "fused_depth", "reduction_percent",
         "time_s", "fused_time_s"], rows, args.format)
    _emit(text, args.output)
    return EXIT_OK


def cmd_noise_compare(args) -> int:
    try:
        widths = [int(x) for x in args.widths.split(",") if x]
        p_values = [float(x) for x in args.p_values.split(",") if x]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rows = []
    for width in widths:
        circuit = generators.bell_circuit() if width == 2 else generators.ghz_circuit(width)
        ideal = noise.statevector_distribution(
            get_engine("reference").run_circuit(circuit))
        for p in p_values:
            try:
                rho = noise.evolve_noisy(circuit, p)
            except ValueError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_INFEASIBLE
            noisy = noise.measure_distribution(rho)
            exact = noise.metrics(noisy, ideal)
            probs = rho.diagonal_probabilities()
            counts = sample_from_probabilities(probs / probs.sum(), args.shots,
                                               args.seed, width)
            sampled = noise.metrics(noise.counts_to_distribution(counts), ideal)
            rows.append([
                circuit.name, p,
                f"{exact.classical_fidelity:.6f}", f"{exact.tvd:.6f}",
                f"{sampled.classical_fidelity:.6f}", f"{sampled.tvd:.6f}",
            ])
    text = _table_text(
        ["circuit", "p", "f_cl_exact", "tvd_exact", "f_cl_sampled", "tvd_sampled"],
        rows, args.format)
    _emit(text, args.output)
    return EXIT_OK


def cmd_analyze_counts(args) -> int:
    try:
        with open(args.counts_file) as fh:
            counts = noise.load_counts(fh.read())
        support = {s.strip() for s in args.support.split(",") if s.strip()}
        value = noise.correct_outcome_probability(counts, support)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    _emit(f"{value:.3f}\n", args.output)
    return EXIT_OK


def cmd_select_engine(args) -> int:
    try:
        circuit = _load_circuit(args.circuit, args.seed)
    except qasm.ParseFailure as exc:
        for err in exc.errors:
            print(f"{args.circuit}:{err.render()}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    config = selector.BenchmarkConfig()
    if args.bench_gates is not None:
        config.bench_gate_count = args.bench_gates
    if args.bench_max_qubits is not None:
        config.max_bench_qubits = args.bench_max_qubits
    if args.cache_ttl is not None:
        config.cache_ttl = args.cache_ttl
    chosen, profiles = selector.select(circuit, registered_engines(),
                                       config, _CLI_CACHE)
    doc = {
        "chosen": chosen.name,
        "profiles": [
            {
                "engine": p.engine.name,
                "throughput_gates_per_s": 0.0 if args.no_timing else p.throughput,
                "init_overhead_s": 0.0 if args.no_timing else p.init_overhead,
                "projected_s": (0.0 if args.no_timing
                                else selector.projected_time(len(circuit.gates), p)),
            }
            for p in profiles
        ],
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


_COMMANDS = {
    "run": cmd_run,
    "bench-scaling": cmd_bench_scaling,
    "bench-fusion": cmd_bench_fusion,
    "noise-compare": cmd_noise_compare,
    "analyze-counts": cmd_analyze_counts,
    "select-engine": cmd_select_engine,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and friends
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    logging.getLogger("aqsim.memory").setLevel(logging.INFO)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
