import json
import math
import string
from pathlib import Path

import numpy as np
import pytest

from aqsim.circuit import GateKind, GateOp
from aqsim.qasm import ParseFailure, SourceFormat, parse, to_json
from conftest import circuits_structurally_equal, random_circuit

DATA = Path(__file__).parent / "data" / "qasm"


def parse_file(name: str):
    return parse((DATA / name).read_text())


def errors_of(name: str):
    with pytest.raises(ParseFailure) as exc_info:
        parse_file(name)
    return exc_info.value.errors


# --- spec-pinned examples ------------------------------------------------------

def test_parse_bell_statement():
    circuit = parse("qreg q[2]; h q[0]; cx q[0],q[1];")
    assert circuit.num_qubits == 2
    assert [(g.kind, g.targets) for g in circuit.gates] == [
        (GateKind.H, (0,)), (GateKind.CNOT, (0, 1))]


def test_parse_pi_over_two():
    circuit = parse("qreg q[1]; rz(pi/2) q[0];")
    assert circuit.gates[0].params[0] == pytest.approx(math.pi / 2, abs=1e-15)


def test_unknown_gate_is_semantic_error():
    with pytest.raises(ParseFailure) as exc_info:
        parse("qreg q[1]; foo q[0];")
    (err,) = exc_info.value.errors
    assert err.kind == "semantic"
    assert "foo" in err.message
    assert err.line == 1 and err.column > 1


# --- golden corpus -------------------------------------------------------------

GOLDEN_VALID = {
    # file -> (num_qubits, gate kinds in order)
    "bell.qasm": (2, [GateKind.H, GateKind.CNOT]),
    "ghz5.qasm": (5, [GateKind.H] + [GateKind.CNOT] * 4),
    "all_named_gates.qasm": (3, [
        GateKind.I, GateKind.X, GateKind.Y, GateKind.Z, GateKind.H, GateKind.S,
        GateKind.T, GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.U3,
        GateKind.CNOT, GateKind.CZ, GateKind.SWAP, GateKind.TOFFOLI]),
    "angle_expressions.qasm": (1, [GateKind.RZ] * 6),
    "measure_only.qasm": (2, []),
    "barrier.qasm": (2, [GateKind.H, GateKind.H]),
    "creg_classical.qasm": (1, [GateKind.X]),
    "comments.qasm": (1, [GateKind.H]),
    "no_header.qasm": (2, [GateKind.X]),
    "compact.qasm": (2, [GateKind.H, GateKind.CNOT]),
}

GOLDEN_ERRORS = {
    # file -> error kind that must be present
    "err_unknown_gate.qasm": "semantic",
    "err_bad_char.qasm": "lex",
    "err_unterminated_string.qasm": "lex",
    "err_malformed_expr.qasm": "syntax",
    "err_missing_semicolon.qasm": "syntax",
    "err_missing_bracket.qasm": "syntax",
    "err_index_range.qasm": "semantic",
    "err_two_qregs.qasm": "semantic",
    "err_wrong_params.qasm": "semantic",
    "err_wrong_arity.qasm": "semantic",
    "err_duplicate_target.qasm": "semantic",
    "err_no_qreg.qasm": "semantic",
    "err_division_zero.qasm": "semantic",
    "err_bad_version.qasm": "semantic",
}


def test_corpus_is_large_enough():
    assert len(GOLDEN_VALID) + len(GOLDEN_ERRORS) >= 20
    on_disk = {p.name for p in DATA.glob("*.qasm")}
    assert on_disk == set(GOLDEN_VALID) | set(GOLDEN_ERRORS)


@pytest.mark.parametrize("name", sorted(GOLDEN_VALID))
def test_golden_valid(name):
    expected_qubits, expected_kinds = GOLDEN_VALID[name]
    circuit = parse_file(name)
    assert circuit.num_qubits == expected_qubits
    assert [g.kind for g in circuit.gates] == expected_kinds


@pytest.mark.parametrize("name", sorted(GOLDEN_ERRORS))
def test_golden_errors(name):
    errors = errors_of(name)
    assert any(e.kind == GOLDEN_ERRORS[name] for e in errors), errors
    for err in errors:
        assert err.line >= 1 and err.column >= 1


def test_angle_expression_values():
    circuit = parse_file("angle_expressions.qasm")
    expected = [math.pi / 2, -math.pi / 4, 2 * math.pi / 8 + 0.5,
                (math.pi + 1) / 2, 0.15, 0.0]
    got = [g.params[0] for g in circuit.gates]
    assert got == pytest.approx(expected, abs=1e-15)


def test_error_positions_point_into_source():
    errors = errors_of("err_index_range.qasm")
    text = (DATA / "err_index_range.qasm").read_text()
    lines = text.splitlines()
    for err in errors:
        assert 1 <= err.line <= len(lines)
        assert 1 <= err.column <= len(lines[err.line - 1]) + 1


def test_measure_never_changes_gate_list():
    base = "qreg q[2]; h q[0]; cx q[0],q[1];"
    with_measure = base + " measure q[0] -> c[0]; measure q[1] -> c[1];"
    assert circuits_structurally_equal(parse(base), parse(with_measure))


def test_multiple_errors_collected():
    text = "qreg q[1]; foo q[0]; bar q[0]; h q[5];"
    with pytest.raises(ParseFailure) as exc_info:
        parse(text)
    kinds = [e.kind for e in exc_info.value.errors]
    assert len(kinds) == 3 and all(k == "semantic" for k in kinds)


def test_parser_is_total_on_fuzz_input(rng):
    alphabet = string.printable
    for _ in range(300):
        length = int(rng.integers(0, 60))
        text = "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=length))
        try:
            parse(text)
        except ParseFailure:
            pass  # the only permitted failure mode


# --- JSON interchange ----------------------------------------------------------

def test_to_json_bell_schema_instance():
    circuit = parse("qreg q[2]; h q[0]; cx q[0],q[1];")
    assert json.loads(to_json(circuit)) == {
        "qubits": 2,
        "gates": [{"name": "h", "targets": [0]},
                  {"name": "cx", "targets": [0, 1]}],
    }


def test_to_json_empty_circuit():
    from aqsim.circuit import Circuit
    assert json.loads(to_json(Circuit(1, []))) == {"qubits": 1, "gates": []}


def test_to_json_custom_identity():
    from aqsim.circuit import Circuit
    circuit = Circuit(1, [GateOp(GateKind.CUSTOM, (0,), (), np.eye(2))])
    entry = json.loads(to_json(circuit))["gates"][0]
    assert entry["name"] == "unitary"
    assert entry["matrix_re"] == [1.0, 0.0, 0.0, 1.0]
    assert entry["matrix_im"] == [0.0, 0.0, 0.0, 0.0]


def test_json_round_trip_100_random_circuits(rng):
    for _ in range(100):
        n = int(rng.integers(1, 7))
        g = int(rng.integers(0, 20))
        circuit = random_circuit(rng, n, g)
        back = parse(to_json(circuit), SourceFormat.JSON)
        assert circuits_structurally_equal(circuit, back, tol=1e-15)


def test_json_parse_reports_positions_on_malformed_text():
    with pytest.raises(ParseFailure) as exc_info:
        parse('{"qubits": 2, "gates": [', SourceFormat.JSON)
    (err,) = exc_info.value.errors
    assert err.kind == "syntax" and err.line >= 1


@pytest.mark.parametrize("doc, fragment", [
    ({"qubits": 0, "gates": []}, "qubits"),
    ({"qubits": 1, "gates": [{"name": "nope", "targets": [0]}]}, "unknown gate"),
    ({"qubits": 1, "gates": [{"name": "h", "targets": [0], "matrix_re": []}]},
     "only valid for 'unitary'"),
    ({"qubits": 1, "gates": [{"name": "unitary", "targets": [0],
                              "matrix_re": [1, 0], "matrix_im": [0, 0]}]},
     "matrix_re/matrix_im"),
    ({"qubits": 1, "gates": [{"name": "h", "targets": [2]}]}, "out of range"),
], ids=["zero-qubits", "unknown-gate", "stray-matrix", "short-matrix", "bad-target"])
def test_json_semantic_errors(doc, fragment):
    with pytest.raises(ParseFailure) as exc_info:
        parse(json.dumps(doc), SourceFormat.JSON)
    assert any(fragment in e.message for e in exc_info.value.errors)
