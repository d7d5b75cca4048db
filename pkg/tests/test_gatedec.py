import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.python.adia import (
    PAULI_Y, Schedule, StateVector, expm_hermitian, initial_hamiltonian, interpolate,
    step_unitaries,
)
from src.python.bitplan import BiPrimeInstance
from src.python.errors import DimensionMismatch, NotDiagonal, NotUnitModulus, UnsupportedStructure
from src.python.gatedec import (
    Gate, GateProgram, concatenate, cx, decompose_diag_1q, decompose_step,
    distance_up_to_global_phase, normalize_angle, peephole, preparation_program,
    rz, simulate_program, split_step_hamiltonian, trotter_bound, u1, with_readout, x,
)
from src.python.hamcomp import compile_peng


def normalized_35_step(s=0.5):
    H_p, _ = compile_peng(BiPrimeInstance(35), (3, 3))
    diag = H_p.diagonal()
    H_f = np.diag(diag / diag.max()).astype(complex)
    return interpolate(initial_hamiltonian(2, 'transverse', 1.0), H_f, s)


def test_normalize_angle():
    assert normalize_angle(-math.pi) == math.pi
    assert normalize_angle(math.pi) == math.pi
    assert normalize_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert u1(2 * math.pi + 0.25, 0).theta == pytest.approx(0.25)


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate('ccx', (0,))
    with pytest.raises(ValueError):
        Gate('u1', (0,))
    with pytest.raises(ValueError):
        Gate('x', (0,), 0.5)
    with pytest.raises(ValueError):
        cx(1, 1)
    with pytest.raises(DimensionMismatch):
        GateProgram(1, (x(1),))


def test_cx_uses_the_first_qubit_as_control():
    U = simulate_program(GateProgram(2, (cx(0, 1),)))
    # |01> (qubit 0 set) -> |11>
    assert_allclose(U[:, 1], np.eye(4)[3])
    assert_allclose(U[:, 2], np.eye(4)[2])


def test_distance_ignores_global_phase():
    I = np.eye(2, dtype=complex)
    Z = np.diag([1.0, -1.0]).astype(complex)
    assert distance_up_to_global_phase(I, np.exp(0.7j) * I) == pytest.approx(0.0, abs=1e-12)
    assert distance_up_to_global_phase(I, Z) == pytest.approx(math.sqrt(2))
    with pytest.raises(DimensionMismatch):
        distance_up_to_global_phase(I, np.eye(4))


@pytest.mark.parametrize("t1, t2", [(0.3, -1.1), (math.pi, 0.0), (-2.5, 2.9)])
def test_diagonal_decomposition_is_exact(t1, t2):
    U = np.diag([np.exp(1j * t1), np.exp(1j * t2)])
    program = decompose_diag_1q(U)
    assert [g.kind for g in program.gates] == ['x', 'u1', 'x', 'u1']
    assert np.max(np.abs(simulate_program(program) - U)) < 1e-12


def test_diagonal_decomposition_rejects_bad_input():
    with pytest.raises(NotDiagonal):
        decompose_diag_1q(np.array([[1, 0.1], [0, 1]], dtype=complex))
    with pytest.raises(NotUnitModulus):
        decompose_diag_1q(np.diag([2.0, 1.0]))


def test_paper_compat_steps_decompose_exactly():
    J = 2 * np.pi * 1e6
    H_i = initial_hamiltonian(1, 'paper-compat', J)
    H_f = J * np.eye(2, dtype=complex)
    schedule = Schedule(T=10e-6, M=8, J=J, mode='paper-compat')
    for U in step_unitaries(H_i, H_f, schedule):
        program = decompose_diag_1q(U, peephole_pass=True)
        assert distance_up_to_global_phase(simulate_program(program), U) < 1e-10


def test_peephole():
    program = GateProgram(1, (u1(0.3, 0), u1(0.4, 0), x(0), x(0), rz(0.0, 0)))
    merged = peephole(program)
    assert len(merged) == 1
    assert merged.gates[0].kind == 'u1'
    assert merged.gates[0].theta == pytest.approx(0.7)
    assert distance_up_to_global_phase(simulate_program(merged), simulate_program(program)) < 1e-12


def test_split_step_hamiltonian():
    H = normalized_35_step()
    structure = split_step_hamiltonian(H)
    assert structure.x_coefficients == pytest.approx((-0.5, -0.5))
    assert_allclose(structure.D + structure.B, H, atol=1e-12)
    assert_allclose(structure.diagonal.diagonal(), np.diag(H).real, atol=1e-12)
    with pytest.raises(UnsupportedStructure):
        split_step_hamiltonian(PAULI_Y)


@pytest.mark.parametrize("order", [1, 2])
def test_trotter_error_within_bound(order):
    H = normalized_35_step()
    exact = expm_hermitian(H, 1.0)
    program = decompose_step(H, 1.0, order=order, tolerance=1e-3)
    bound = program.metadata['trotter_bound']
    assert program.metadata['order'] == order
    assert bound <= 1e-3
    distance = distance_up_to_global_phase(simulate_program(program), exact)
    assert distance <= 2 * bound
    assert distance <= 1e-3


def test_trotter_bound_shrinks_with_slices():
    structure = split_step_hamiltonian(normalized_35_step())
    assert trotter_bound(structure, 1.0, 1, 4) == pytest.approx(trotter_bound(structure, 1.0, 1, 2) / 2)
    assert trotter_bound(structure, 1.0, 2, 4) == pytest.approx(trotter_bound(structure, 1.0, 2, 2) / 4)


def test_fixed_slices_and_commuting_steps():
    program = decompose_step(normalized_35_step(), 1.0, order=2, slices=3)
    assert program.metadata['slices'] == 3

    diagonal = np.diag([0.2, -0.7, 1.3, 0.4]).astype(complex)
    program = decompose_step(diagonal, 0.8)
    assert program.metadata['trotter_bound'] == 0.0
    assert distance_up_to_global_phase(simulate_program(program), expm_hermitian(diagonal, 0.8)) < 1e-10


def test_decompose_step_rejects_bad_order():
    with pytest.raises(ValueError):
        decompose_step(normalized_35_step(), 1.0, order=3)


def test_preparation_and_readout():
    prep = preparation_program(2, 'transverse')
    state = simulate_program(prep)[:, 0]
    assert_allclose(state, StateVector.uniform(2).amplitudes, atol=1e-12)

    prep = preparation_program(1, 'paper-compat')
    assert_allclose(np.abs(simulate_program(prep)[:, 0]), [0.0, 1.0])

    program = with_readout(prep, {0: 'y'})
    assert program.measured == (0,)
    assert program.metadata['readout'] == {'0': 'Y'}
    assert [g.kind for g in program.gates] == ['x', 'sdg', 'h']
    with pytest.raises(ValueError):
        with_readout(prep, {0: 'W'})


def test_concatenate_applies_in_order():
    a = GateProgram(1, (x(0),))
    b = GateProgram(1, (u1(0.5, 0),))
    full = concatenate([a, b], {'stage': 'full'})
    assert full.metadata == {'stage': 'full'}
    assert_allclose(simulate_program(full), simulate_program(b) @ simulate_program(a))
    with pytest.raises(ValueError):
        concatenate([])
