"""Circuit text formats: an OpenQASM-2 subset parser and a JSON interchange format.

The QASM subset supports one quantum register, the fixed gate-name table
below, angle expressions over literals / pi / + - * / with unary minus, and
accepts-but-ignores ``measure``, ``barrier``, ``creg`` and ``include`` lines
so real files run unmodified. User-defined ``gate`` subroutines are out of
scope; arbitrary unitaries enter through the JSON format only.

The parser is total: any input yields either a Circuit or a ParseFailure
carrying positioned ParseErrors; it never raises anything else.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, GateKind, GateOp, validate


class SourceFormat(enum.Enum):
    QASM2_SUBSET = "qasm2_subset"
    JSON = "json"


@dataclass(frozen=True)
class ParseError:
    line: int
    column: int
    message: str
    kind: str  # "lex" | "syntax" | "semantic"

    def render(self) -> str:
        return f"{self.line}:{self.column}: {self.kind} error: {self.message}"


class ParseFailure(Exception):
    """Raised when parsing fails; carries every ParseError found."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("; ".join(e.render() for e in errors))


# QASM gate name -> canonical kind. The JSON format uses the same names plus
# "unitary" for explicit-matrix gates.
GATE_NAME_TABLE: dict[str, GateKind] = {
    "id": GateKind.I, "x": GateKind.X, "y": GateKind.Y, "z": GateKind.Z,
    "h": GateKind.H, "s": GateKind.S, "t": GateKind.T,
    "rx": GateKind.RX, "ry": GateKind.RY, "rz": GateKind.RZ,
    "u3": GateKind.U3, "cx": GateKind.CNOT, "cz": GateKind.CZ,
    "swap": GateKind.SWAP, "ccx": GateKind.TOFFOLI,
}
KIND_NAME_TABLE = {kind: name for name, kind in GATE_NAME_TABLE.items()}


# --- lexer -------------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    type: str   # ID NUMBER STRING SYMBOL EOF
    text: str
    line: int
    column: int


_SYMBOLS = set("()[]{},;+-*/>=<")


def _tokenize(text: str) -> tuple[list[_Token], list[ParseError]]:
    tokens: list[_Token] = []
    errors: list[ParseError] = []
    line, col = 1, 1
    i = 0
    length = len(text)
    while i < length:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < length and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isalpha() or ch == "_":
            j = i
            while j < length and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ID", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit() or (ch == "." and i + 1 < length and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < length and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                seen_dot = seen_dot or text[j] == "."
                j += 1
            if j < length and text[j] in "eE":
                k = j + 1
                if k < length and text[k] in "+-":
                    k += 1
                if k < length and text[k].isdigit():
                    while k < length and text[k].isdigit():
                        k += 1
                    j = k
            tokens.append(_Token("NUMBER", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            while j < length and text[j] not in '"\n':
                j += 1
            if j < length and text[j] == '"':
                tokens.append(_Token("STRING", text[i + 1:j], line, start_col))
                col += j - i + 1
                i = j + 1
            else:
                errors.append(ParseError(line, start_col, "unterminated string", "lex"))
                col += j - i
                i = j
            continue
        if ch in _SYMBOLS:
            tokens.append(_Token("SYMBOL", ch, line, start_col))
            i += 1
            col += 1
            continue
        errors.append(ParseError(line, start_col, f"unexpected character {ch!r}", "lex"))
        i += 1
        col += 1
    tokens.append(_Token("EOF", "", line, col))
    return tokens, errors


# --- QASM subset parser --------------------------------------------------------

class _QasmParser:
    def __init__(self, text: str):
        self.tokens, self.errors = _tokenize(text)
        self.pos = 0
        self.reg_name: str | None = None
        self.reg_size = 0
        self.gates: list[GateOp] = []

    # token helpers

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.type != "EOF":
            self.pos += 1
        return tok

    def match_symbol(self, sym: str) -> bool:
        tok = self.peek()
        if tok.type == "SYMBOL" and tok.text == sym:
            self.advance()
            return True
        return False

    def error(self, tok: _Token, message: str, kind: str) -> None:
        self.errors.append(ParseError(tok.line, tok.column, message, kind))

    def skip_statement(self) -> None:
        """Recover to just past the next ';' (or EOF)."""
        while True:
            tok = self.advance()
            if tok.type == "EOF" or (tok.type == "SYMBOL" and tok.text == ";"):
                return

    def expect_symbol(self, sym: str) -> bool:
        tok = self.peek()
        if tok.type == "SYMBOL" and tok.text == sym:
            self.advance()
            return True
        self.error(tok, f"expected {sym!r}, found {tok.text or 'end of input'!r}", "syntax")
        return False

    # grammar

    def parse(self) -> Circuit:
        while self.peek().type != "EOF":
            self.statement()
        if self.reg_name is None:
            tok = self.peek()
            self.errors.append(ParseError(
                tok.line, tok.column, "no quantum register declared", "semantic"))
        if self.errors:
            raise ParseFailure(self.errors)
        circuit = Circuit(self.reg_size, self.gates)
        violations = validate(circuit)
        if violations:  # pragma: no cover - parser checks should catch these first
            raise ParseFailure([
                ParseError(1, 1, v.message, "semantic") for v in violations])
        return circuit

    def statement(self) -> None:
        tok = self.peek()
        if tok.type != "ID":
            self.error(tok, f"expected a statement, found {tok.text!r}", "syntax")
            self.skip_statement()
            return
        word = tok.text
        if word == "OPENQASM":
            self.advance()
            version = self.peek()
            if version.type == "NUMBER":
                self.advance()
                if version.text != "2.0":
                    self.error(version, f"unsupported version {version.text}", "semantic")
            else:
                self.error(version, "expected version number after OPENQASM", "syntax")
            self.expect_symbol(";") or self.skip_statement()
            return
        if word in ("include", "measure", "barrier", "creg"):
            # accepted and ignored so real QASM files run unmodified
            self.skip_statement()
            return
        if word == "qreg":
            self.advance()
            self.qreg_declaration(tok)
            return
        self.advance()
        self.gate_statement(tok)

    def qreg_declaration(self, kw: _Token) -> None:
        if self.reg_name is not None:
            self.error(kw, "multiple qreg declarations; exactly one register supported",
                       "semantic")
            self.skip_statement()
            return
        name = self.peek()
        if name.type != "ID":
            self.error(name, "expected register name after qreg", "syntax")
            self.skip_statement()
            return
        self.advance()
        if not self.expect_symbol("["):
            self.skip_statement()
            return
        size = self.peek()
        if size.type != "NUMBER" or not size.text.isdigit():
            self.error(size, "expected integer register size", "syntax")
            self.skip_statement()
            return
        self.advance()
        if not self.expect_symbol("]") or not self.expect_symbol(";"):
            self.skip_statement()
            return
        if int(size.text) < 1:
            self.error(size, "register size must be >= 1", "semantic")
            return
        self.reg_name = name.text
        self.reg_size = int(size.text)

    def gate_statement(self, name_tok: _Token) -> None:
        kind = GATE_NAME_TABLE.get(name_tok.text)
        if kind is None:
            self.error(name_tok, f"unknown gate {name_tok.text!r}", "semantic")
            self.skip_statement()
            return
        params: list[float] = []
        if self.match_symbol("("):
            params = self.expression_list()
            if params is None:
                self.skip_statement()
                return
            if not self.expect_symbol(")"):
                self.skip_statement()
                return
        if len(params) != kind.param_count:
            self.error(name_tok,
                       f"{name_tok.text} takes {kind.param_count} parameter(s), "
                       f"got {len(params)}", "semantic")
            self.skip_statement()
            return
        targets = self.argument_list()
        if targets is None:
            self.skip_statement()
            return
        if not self.expect_symbol(";"):
            self.skip_statement()
            return
        if len(targets) != kind.arity:
            self.error(name_tok,
                       f"{name_tok.text} acts on {kind.arity} qubit(s), "
                       f"got {len(targets)}", "semantic")
            return
        if len(set(targets)) != len(targets):
            self.error(name_tok, f"duplicate target qubit in {name_tok.text}", "semantic")
            return
        self.gates.append(GateOp(kind, tuple(targets), tuple(params)))

    def argument_list(self) -> list[int] | None:
        targets: list[int] = []
        while True:
            idx = self.qubit_argument()
            if idx is None:
                return None
            targets.append(idx)
            if not self.match_symbol(","):
                return targets

    def qubit_argument(self) -> int | None:
        name = self.peek()
        if name.type != "ID":
            self.error(name, "expected a qubit argument", "syntax")
            return None
        self.advance()
        if self.reg_name is None:
            self.error(name, "no quantum register declared", "semantic")
            return None
        if name.text != self.reg_name:
            self.error(name, f"unknown register {name.text!r}", "semantic")
            return None
        if not self.expect_symbol("["):
            return None
        idx_tok = self.peek()
        if idx_tok.type != "NUMBER" or not idx_tok.text.isdigit():
            self.error(idx_tok, "expected integer qubit index", "syntax")
            return None
        self.advance()
        if not self.expect_symbol("]"):
            return None
        index = int(idx_tok.text)
        if index >= self.reg_size:
            self.error(idx_tok,
                       f"qubit index {index} out of range for {self.reg_name}"
                       f"[{self.reg_size}]", "semantic")
            return None
        return index

    # expressions: expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)*
    # factor := '-' factor | '(' expr ')' | NUMBER | 'pi'

    def expression_list(self) -> list[float] | None:
        values: list[float] = []
        while True:
            value = self.expression()
            if value is None:
                return None
            values.append(value)
            if not self.match_symbol(","):
                return values

    def expression(self) -> float | None:
        value = self.term()
        if value is None:
            return None
        while True:
            if self.match_symbol("+"):
                rhs = self.term()
                if rhs is None:
                    return None
                value += rhs
            elif self.match_symbol("-"):
                rhs = self.term()
                if rhs is None:
                    return None
                value -= rhs
            else:
                return value

    def term(self) -> float | None:
        value = self.factor()
        if value is None:
            return None
        while True:
            if self.match_symbol("*"):
                rhs = self.factor()
                if rhs is None:
                    return None
                value *= rhs
            elif self.match_symbol("/"):
                tok = self.peek()
                rhs = self.factor()
                if rhs is None:
                    return None
                if rhs == 0.0:
                    self.error(tok, "division by zero in angle expression", "semantic")
                    return None
                value /= rhs
            else:
                return value

    def factor(self) -> float | None:
        tok = self.peek()
        if tok.type == "SYMBOL" and tok.text == "-":
            self.advance()
            value = self.factor()
            return None if value is None else -value
        if tok.type == "SYMBOL" and tok.text == "(":
            self.advance()
            value = self.expression()
            if value is None:
                return None
            if not self.expect_symbol(")"):
                return None
            return value
        if tok.type == "NUMBER":
            self.advance()
            return float(tok.text)
        if tok.type == "ID" and tok.text == "pi":
            self.advance()
            return math.pi
        self.error(tok, f"malformed expression at {tok.text or 'end of input'!r}", "syntax")
        return None


# --- JSON interchange format ---------------------------------------------------

def _parse_json(text: str) -> Circuit:
    errors: list[ParseError] = []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseFailure([ParseError(exc.lineno, exc.colno, exc.msg, "syntax")]) from None

    def fail(message: str) -> None:
        errors.append(ParseError(1, 1, message, "semantic"))

    if not isinstance(doc, dict):
        raise ParseFailure([ParseError(1, 1, "top level must be an object", "semantic")])
    qubits = doc.get("qubits")
    if not isinstance(qubits, int) or qubits < 1:
        fail(f"'qubits' must be a positive integer, got {qubits!r}")
        raise ParseFailure(errors)
    entries = doc.get("gates")
    if not isinstance(entries, list):
        fail("'gates' must be a list")
        raise ParseFailure(errors)

    gates: list[GateOp] = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            fail(f"gate {i}: entry must be an object")
            continue
        name = entry.get("name")
        targets = entry.get("targets")
        if not isinstance(targets, list) or not all(isinstance(t, int) for t in targets):
            fail(f"gate {i}: 'targets' must be a list of integers")
            continue
        params = entry.get("params", [])
        if not isinstance(params, list) or not all(
                isinstance(p, (int, float)) for p in params):
            fail(f"gate {i}: 'params' must be a list of numbers")
            continue
        if name == "unitary":
            dim = 1 << len(targets)
            re = entry.get("matrix_re")
            im = entry.get("matrix_im")
            if (not isinstance(re, list) or not isinstance(im, list)
                    or len(re) != dim * dim or len(im) != dim * dim):
                fail(f"gate {i}: unitary needs matrix_re/matrix_im of {dim * dim} numbers")
                continue
            matrix = (np.asarray(re, dtype=float)
                      + 1j * np.asarray(im, dtype=float)).reshape(dim, dim)
            gates.append(GateOp(GateKind.CUSTOM, tuple(targets), (), matrix))
            continue
        kind = GATE_NAME_TABLE.get(name) if isinstance(name, str) else None
        if kind is None:
            fail(f"gate {i}: unknown gate {name!r}")
            continue
        if "matrix_re" in entry or "matrix_im" in entry:
            fail(f"gate {i}: matrix fields are only valid for 'unitary'")
            continue
        gates.append(GateOp(kind, tuple(targets), tuple(float(p) for p in params)))

    if errors:
        raise ParseFailure(errors)
    circuit = Circuit(qubits, gates)
    violations = validate(circuit)
    if violations:
        raise ParseFailure([ParseError(1, 1, v.message, "semantic") for v in violations])
    return circuit


def parse(text: str, fmt: SourceFormat = SourceFormat.QASM2_SUBSET) -> Circuit:
    """Parse circuit text; raises ParseFailure listing every error found."""
    if fmt is SourceFormat.JSON:
        return _parse_json(text)
    return _QasmParser(text).parse()


def to_json(circuit: Circuit) -> str:
    """Deterministic JSON serialization; parse(to_json(c), JSON) reproduces c.

    Floats are emitted with repr precision, so angles and matrix entries
    round-trip bit-exactly.
    """
    entries = []
    for op in circuit.gates:
        if op.kind is GateKind.CUSTOM:
            flat = op.matrix.reshape(-1)
            entry = {
                "name": "unitary",
                "targets": list(op.targets),
                "matrix_re": [float(x) for x in flat.real],
                "matrix_im": [float(x) for x in flat.imag],
            }
        else:
            entry = {
                "name": KIND_NAME_TABLE[op.kind],
                "targets": list(op.targets),
            }
            if op.params:
                entry["params"] = list(op.params)
        entries.append(entry)
    return json.dumps({"qubits": circuit.num_qubits, "gates": entries})
