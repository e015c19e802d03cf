"""Runtime-adaptive quantum state-vector simulator.

Pipeline: parse -> fuse -> precision selection -> engine selection -> execute,
with a memory governor that can migrate a running state between engines and a
density-matrix noise model for cross-validation.
"""

from .circuit import (Circuit, GateKind, GateOp, Precision, StateVector,
                      effective_unitary, expand_unitary, gate_matrix, validate)
from .dag import FusionReport, GateDag, build_dag, depth, fuse, model_fusion_speedup
from .engines import (AllocationError, Engine, EngineId, ParallelEngine,
                      ReferenceEngine, SampleResult, available_engines, get_engine,
                      register_engine, registered_engines, run_circuit, sample,
                      state_fidelity)
from .generators import (ansatz_circuit, bell_circuit, builtin_circuit, ghz_circuit,
                         qft_circuit, random_su2_circuit)
from .memory import (FallbackError, FallbackEvent, HostMemoryProbe, MemoryGovernor,
                     MemoryModelParams, ScriptedTraceProbe, check_feasible,
                     estimate_memory, execute_fallback, run_with_fallback,
                     should_fallback)
from .noise import (DensityMatrix, DistributionMetrics, correct_outcome_probability,
                    evolve_noisy, load_counts, measure_distribution, metrics)
from .precision import PrecisionDecision, select_precision
from .qasm import ParseError, ParseFailure, SourceFormat, parse, to_json
from .selector import (BenchmarkConfig, EngineProfile, SelectionCache, invalidate,
                       select)

__version__ = "0.1.0"
