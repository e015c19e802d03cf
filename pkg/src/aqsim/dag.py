"""Gate-dependency DAG, depth, and the pairwise fusion pass.

The DAG keeps per-qubit wire structure: each node records, for every qubit it
touches, the previous and next gate on that wire. An edge (u, v) exists iff u
is the most recent earlier gate on some qubit shared with v, which bounds the
edge count by the sum of gate widths.

Fusion repeatedly merges a gate into its predecessor when they are directly
dependent, their combined qubit set fits the width limit, and the predecessor
is the immediate prior gate on every shared qubit. The merged matrix is the
ordered product of both unitaries lifted to the union qubit set, with the
union's qubits sorted ascending as the local bit order. Fused gates always
become CUSTOM; named kinds are not re-recognized.
"""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

from .circuit import (Circuit, GateKind, GateOp, effective_unitary,
                      expand_unitary, require_valid)


@dataclass
class DagNode:
    op: GateOp
    order: int
    pred: dict[int, int] = field(default_factory=dict)  # qubit -> node id
    succ: dict[int, int] = field(default_factory=dict)

    @property
    def qubits(self) -> frozenset[int]:
        return frozenset(self.op.targets)


@dataclass
class GateDag:
    num_qubits: int
    nodes: dict[int, DagNode] = field(default_factory=dict)

    def predecessors(self, node_id: int) -> set[int]:
        return set(self.nodes[node_id].pred.values())

    def successors(self, node_id: int) -> set[int]:
        return set(self.nodes[node_id].succ.values())

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for v in self.nodes for u in self.predecessors(v)]

    def topological_order(self) -> list[int]:
        """Kahn's algorithm with original program order as the tie-break."""
        indegree = {v: len(self.predecessors(v)) for v in self.nodes}
        ready = [(self.nodes[v].order, v) for v, d in indegree.items() if d == 0]
        heapq.heapify(ready)
        order: list[int] = []
        while ready:
            _, v = heapq.heappop(ready)
            order.append(v)
            for w in self.successors(v):
                indegree[w] -= 1
                if indegree[w] == 0:
                    heapq.heappush(ready, (self.nodes[w].order, w))
        if len(order) != len(self.nodes):
            raise RuntimeError("dependency graph contains a cycle")
        return order

    def layered_depth(self) -> int:
        """Longest path counting vertices: a gate's layer is 1 + max over preds."""
        layer: dict[int, int] = {}
        for v in self.topological_order():
            preds = self.predecessors(v)
            layer[v] = 1 + max((layer[u] for u in preds), default=0)
        return max(layer.values(), default=0)


def build_dag(circuit: Circuit) -> GateDag:
    """Wire-structure DAG in O(g * n): scan gates, tracking the last gate per qubit."""
    require_valid(circuit)
    dag = GateDag(circuit.num_qubits)
    last_on: dict[int, int] = {}
    for i, op in enumerate(circuit.gates):
        node = DagNode(op, order=i)
        for t in op.targets:
            if t in last_on:
                node.pred[t] = last_on[t]
                dag.nodes[last_on[t]].succ[t] = i
            last_on[t] = i
        dag.nodes[i] = node
    return dag


def depth(circuit: Circuit) -> int:
    """Longest dependency-path length of the circuit, in gates."""
    return build_dag(circuit).layered_depth()


@dataclass
class FusionReport:
    original_gate_count: int
    fused_gate_count: int
    original_depth: int
    fused_depth: int
    reduction_percent: float
    fusion_pass_time: float


def _reachable(dag: GateDag, src: int, goals: set[int], skip: int) -> bool:
    """Is any goal reachable from src, ignoring node `skip`?"""
    stack = [src]
    seen = {src, skip}
    while stack:
        v = stack.pop()
        for w in dag.successors(v):
            if w in goals:
                return True
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def _fusible(dag: GateDag, u: int, v: int, max_width: int) -> bool:
    nu, nv = dag.nodes[u], dag.nodes[v]
    union = nu.qubits | nv.qubits
    if len(union) > max_width:
        return False
    shared = nu.qubits & nv.qubits
    if any(nv.pred.get(w) != u for w in shared):
        return False
    # Merging places v's action at u's slot; if v has another predecessor that
    # itself depends on u, the redirected edge would close a cycle. Only
    # possible when both gates touch qubits the other does not (width >= 3).
    if (nu.qubits - nv.qubits) and (nv.qubits - nu.qubits):
        others = dag.predecessors(v) - {u}
        if others and _reachable(dag, u, others, skip=v):
            return False
    return True


def _merge(dag: GateDag, u: int, v: int) -> None:
    """Fuse v into u: u's op becomes the compound gate, v leaves the DAG."""
    nu, nv = dag.nodes[u], dag.nodes[v]
    union = sorted(nu.qubits | nv.qubits)
    width = len(union)
    pos = {q: i for i, q in enumerate(union)}
    mat_u = expand_unitary(effective_unitary(nu.op),
                           [pos[t] for t in nu.op.targets], width)
    mat_v = expand_unitary(effective_unitary(nv.op),
                           [pos[t] for t in nv.op.targets], width)
    fused_op = GateOp(GateKind.CUSTOM, tuple(union), (), mat_v @ mat_u)

    pred: dict[int, int] = {}
    succ: dict[int, int] = {}
    for w in union:
        if w in nu.qubits and w in nv.qubits:
            p, s = nu.pred.get(w), nv.succ.get(w)
        elif w in nu.qubits:
            p, s = nu.pred.get(w), nu.succ.get(w)
        else:
            p, s = nv.pred.get(w), nv.succ.get(w)
        if p is not None:
            pred[w] = p
        if s is not None:
            succ[w] = s

    nu.op = fused_op
    nu.pred = pred
    nu.succ = succ
    for w, p in pred.items():
        dag.nodes[p].succ[w] = u
    for w, s in succ.items():
        dag.nodes[s].pred[w] = u
    del dag.nodes[v]


def fuse(circuit: Circuit, max_fuse_width: int = 2) -> tuple[Circuit, FusionReport]:
    """Fusion pass: returns the optimized circuit and a before/after report.

    The loop scans nodes in topological order and merges each gate into a
    qualifying predecessor, repeating until a full pass makes no change; gate
    count strictly decreases every repeated pass, so termination is immediate.
    """
    if max_fuse_width not in (1, 2, 3):
        raise ValueError(f"max_fuse_width must be 1, 2, or 3, got {max_fuse_width}")
    original_depth_ = depth(circuit)
    start = time.perf_counter()
    dag = build_dag(circuit)
    changed = True
    while changed:
        changed = False
        for v in dag.topological_order():
            if v not in dag.nodes:
                continue
            preds = sorted(dag.predecessors(v),
                           key=lambda u: (dag.nodes[u].order, u))
            for u in preds:
                if _fusible(dag, u, v, max_fuse_width):
                    _merge(dag, u, v)
                    changed = True
                    break
    fused_gates = [dag.nodes[v].op for v in dag.topological_order()]
    fused = Circuit(circuit.num_qubits, fused_gates, circuit.name)
    elapsed = time.perf_counter() - start

    fused_depth_ = depth(fused)
    reduction = (100.0 * (1.0 - fused_depth_ / original_depth_)
                 if original_depth_ > 0 else 0.0)
    report = FusionReport(
        original_gate_count=len(circuit.gates),
        fused_gate_count=len(fused.gates),
        original_depth=original_depth_,
        fused_depth=fused_depth_,
        reduction_percent=reduction,
        fusion_pass_time=elapsed,
    )
    return fused, report


def model_fusion_speedup(report: FusionReport, c1: float, c2: float,
                         c_overhead: float) -> float:
    """Projected fusion speedup from measured per-gate costs (reporting utility).

    c1/c2 are per-gate execution costs before/after fusion, c_overhead is the
    per-gate dispatch overhead, and the one-time fusion cost comes from the
    report itself.
    """
    numerator = report.original_gate_count * c1 + report.original_gate_count * c_overhead
    denominator = report.fused_gate_count * c2 + report.fusion_pass_time
    if denominator == 0:
        raise ZeroDivisionError("fused cost and fusion time are both zero")
    return numerator / denominator
