import numpy as np
import pytest

from src.python.adia import Schedule, initial_hamiltonian, interpolate, step_unitaries
from src.python.errors import QasmSyntaxError
from src.python.gatedec import (
    GateProgram, concatenate, cx, decompose_diag_1q, decompose_step,
    distance_up_to_global_phase, preparation_program, rx, simulate_program, u1, with_readout,
)
from src.python.qasm import HEADER, emit_qasm, parse_qasm, save_qasm

J_LAB = 2 * np.pi * 1e6


def paper_compat_run():
    H_i = initial_hamiltonian(1, 'paper-compat', J_LAB)
    H_f = J_LAB * np.eye(2, dtype=complex)
    schedule = Schedule(T=10e-6, M=8, J=J_LAB, mode='paper-compat')
    unitaries = step_unitaries(H_i, H_f, schedule)
    programs = [preparation_program(1, 'paper-compat')]
    programs += [decompose_diag_1q(U, metadata={'step': m}) for m, U in enumerate(unitaries, start=1)]
    return unitaries, concatenate(programs)


def test_emitted_layout():
    program = GateProgram(2, (u1(0.5, 0), cx(0, 1)))
    lines = emit_qasm(program, measure_all=True).splitlines()
    assert lines[:2] == HEADER
    assert lines[2:4] == ['qreg q[2];', 'creg c[2];']
    assert lines[4] == 'u1(0.5) q[0];'
    assert lines[5] == 'cx q[0],q[1];'
    assert lines[6:] == ['measure q[0] -> c[0];', 'measure q[1] -> c[1];']


def test_paper_compat_round_trip():
    unitaries, full = paper_compat_run()
    expected = np.array([[0, 1], [1, 0]], dtype=complex)
    for U in unitaries:
        expected = U @ expected
    parsed = parse_qasm(emit_qasm(full))
    assert parsed.n_qubits == 1
    assert len(parsed) == len(full)
    assert distance_up_to_global_phase(simulate_program(parsed), expected) < 1e-9


def test_trotter_round_trip():
    H_f = np.diag([1.0, 0.0, 0.0, 1.96]).astype(complex)
    H = interpolate(initial_hamiltonian(2, 'transverse', 1.0), H_f, 0.5)
    program = decompose_step(H, 1.0, order=2, slices=8)
    parsed = parse_qasm(emit_qasm(program))
    assert [g.kind for g in parsed.gates] == [g.kind for g in program.gates]
    assert distance_up_to_global_phase(simulate_program(parsed), simulate_program(program)) < 1e-9


def test_measurements_round_trip():
    program = with_readout(GateProgram(2, (rx(0.25, 1),)), {0: 'X', 1: 'Z'})
    parsed = parse_qasm(emit_qasm(program))
    assert parsed.measured == (0, 1)
    assert [g.kind for g in parsed.gates] == ['rx', 'h']


def test_comments_are_ignored():
    text = '\n'.join(HEADER + ['// preparation', 'qreg q[1];', 'creg c[1];', 'x q[0];']) + '\n'
    assert [g.kind for g in parse_qasm(text).gates] == ['x']


@pytest.mark.parametrize("body", [
    'qreg q[1];\nx q[0]\n',
    'qreg q[3];\nccx q[0],q[1],q[2];\n',
    'x q[0];\nqreg q[1];\n',
    'qreg q[1];\nrx q[0];\n',
    'creg c[1];\n',
    'qreg q[1];\nqreg r[1];\n',
    'qreg q[1];\nx q[1];\n',
    'qreg q[1];\ncreg c[2];\nmeasure q[1] -> c[1];\n',
])
def test_syntax_errors(body):
    with pytest.raises(QasmSyntaxError):
        parse_qasm('\n'.join(HEADER) + '\n' + body)


def test_missing_header():
    with pytest.raises(QasmSyntaxError):
        parse_qasm('qreg q[1];\nx q[0];\n')


def test_text_after_the_program_is_rejected():
    text = '\n'.join(HEADER + ['qreg q[1];', 'x q[0];', 'OPENQASM 2.0;']) + '\n'
    with pytest.raises(QasmSyntaxError, match='line 5'):
        parse_qasm(text)


def test_save_qasm(tmp_path):
    _, full = paper_compat_run()
    path = save_qasm(full, str(tmp_path / 'qasm' / 'full.qasm'), measure_all=True)
    text = path.read_text(encoding='utf-8')
    assert text.startswith('OPENQASM 2.0;')
    assert text.rstrip().endswith('measure q[0] -> c[0];')
