"""
OpenQASM 2.0 writer and a reader for exactly the subset the writer emits.
"""
from pathlib import Path
from typing import List

from pyparsing import (
    Group, Keyword, Optional, ParseException, QuotedString, StringEnd, Suppress,
    Word, ZeroOrMore, alphanums, alphas, cpp_style_comment, pyparsing_common,
)

from .errors import DimensionMismatch, QasmSyntaxError
from .gatedec import GATE_KINDS, PARAMETRIC, Gate, GateProgram

HEADER = ['OPENQASM 2.0;', 'include "qelib1.inc";']


def format_angle(theta: float) -> str:
    return f"{theta:.12g}"


def emit_qasm(program: GateProgram, measure_all: bool = False) -> str:
    """Gates in application order; measurements for `program.measured` (or all qubits)."""
    n = program.n_qubits
    lines: List[str] = HEADER + [f"qreg q[{n}];", f"creg c[{n}];"]
    for gate in program.gates:
        args = ','.join(f"q[{t}]" for t in gate.targets)
        if gate.kind in PARAMETRIC:
            lines.append(f"{gate.kind}({format_angle(gate.theta)}) {args};")
        else:
            lines.append(f"{gate.kind} {args};")
    measured = range(n) if measure_all else program.measured
    for q in measured:
        lines.append(f"measure q[{q}] -> c[{q}];")
    return '\n'.join(lines) + '\n'


def _grammar():
    semi = Suppress(';')
    lbra, rbra = Suppress('['), Suppress(']')
    lpar, rpar = Suppress('('), Suppress(')')
    ident = Word(alphas + '_', alphanums + '_')
    integer = pyparsing_common.integer
    real = pyparsing_common.fnumber

    qarg = Group(ident('reg') + lbra + integer('index') + rbra)
    header = Suppress(Keyword('OPENQASM')) + real('version') + semi
    include = Suppress(Keyword('include')) + QuotedString('"')('file') + semi
    register = Group((Keyword('qreg') | Keyword('creg'))('decl') + ident('name')
                     + lbra + integer('size') + rbra + semi)
    measure = Group(Keyword('measure')('measure') + qarg('qubit') + Suppress('->') + qarg('bit') + semi)
    gate = Group(ident('op') + Optional(lpar + real('theta') + rpar)
                 + Group(qarg + ZeroOrMore(Suppress(',') + qarg))('args') + semi)
    program = header + Optional(include) + Group(ZeroOrMore(register | measure | gate))('body') + StringEnd()
    program.ignore(cpp_style_comment)
    return program


_PROGRAM = _grammar()


def parse_qasm(text: str) -> GateProgram:
    """
    Raises:
        QasmSyntaxError: malformed text or a gate outside the emitted subset
    """
    try:
        parsed = _PROGRAM.parse_string(text, parse_all=True)
    except ParseException as exc:
        raise QasmSyntaxError(f"line {exc.lineno}: {exc.msg}") from exc

    n_qubits = None
    gates: List[Gate] = []
    measured: List[int] = []
    for stmt in parsed['body']:
        if 'decl' in stmt:
            if stmt['decl'] == 'qreg':
                if n_qubits is not None:
                    raise QasmSyntaxError("only one qreg is supported")
                n_qubits = int(stmt['size'])
            continue
        if n_qubits is None:
            raise QasmSyntaxError("statement before qreg declaration")
        if 'measure' in stmt:
            measured.append(int(stmt['qubit']['index']))
            continue
        kind = stmt['op']
        if kind not in GATE_KINDS:
            raise QasmSyntaxError(f"unsupported gate {kind!r}")
        targets = tuple(int(arg['index']) for arg in stmt['args'])
        theta = float(stmt['theta']) if 'theta' in stmt else None
        try:
            gates.append(Gate(kind, targets, theta))
        except ValueError as exc:
            raise QasmSyntaxError(str(exc)) from exc
    if n_qubits is None:
        raise QasmSyntaxError("missing qreg declaration")
    if any(q >= n_qubits for q in measured):
        raise QasmSyntaxError(f"measurement outside q[{n_qubits}]")
    try:
        return GateProgram(n_qubits, tuple(gates), {}, tuple(measured))
    except DimensionMismatch as exc:
        raise QasmSyntaxError(str(exc)) from exc


def save_qasm(program: GateProgram, path: str, measure_all: bool = False) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(emit_qasm(program, measure_all), encoding='utf-8')
    except OSError as exc:
        raise OSError(f"cannot write QASM to {path}: {exc}") from exc
    return path
