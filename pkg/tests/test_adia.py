import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.python.adia import (
    Schedule, StateVector, auto_schedule, evolve, gap_scan, initial_hamiltonian,
    initial_state, interpolate, phase_table, render_phase_table, runtime_bound,
    step_unitaries,
)
from src.python.bitplan import BiPrimeInstance
from src.python.errors import DegenerateGap, DimensionMismatch, NormViolation
from src.python.hamcomp import compile_peng, ground_states

J_LAB = 2 * np.pi * 1e6


def peng_pair(N, split, J=1.0):
    H_p, qubit_map = compile_peng(BiPrimeInstance(N), split)
    H_f = J * np.diag(H_p.diagonal()).astype(complex)
    H_i = initial_hamiltonian(qubit_map.n_qubits, 'transverse', J)
    return H_p, H_i, H_f


def paper_pair(J=J_LAB):
    return initial_hamiltonian(1, 'paper-compat', J), J * np.eye(2, dtype=complex)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule(T=0.0, M=8, J=1.0)
    with pytest.raises(ValueError):
        Schedule(T=1.0, M=0, J=1.0)
    with pytest.raises(ValueError):
        Schedule(T=1.0, M=8, J=1.0, mode='ising')
    assert Schedule(T=10e-6, M=8, J=J_LAB).dt == pytest.approx(1.25e-6)


def test_state_vector_checks():
    with pytest.raises(NormViolation):
        StateVector(1, np.array([1.0, 1.0]))
    with pytest.raises(DimensionMismatch):
        StateVector(2, np.array([1.0, 0.0]))
    rho = StateVector.basis(2, 1).reduced_density_matrix(0)
    assert_allclose(rho, [[0, 0], [0, 1]])
    rho = StateVector.basis(2, 1).reduced_density_matrix(1)
    assert_allclose(rho, [[1, 0], [0, 0]])


@pytest.mark.parametrize("mode", ['paper-compat', 'transverse'])
def test_initial_state_is_ground_state(mode):
    H = initial_hamiltonian(2, mode, 1.0)
    psi = initial_state(2, mode).amplitudes
    assert_allclose(H @ psi, -2.0 * psi, atol=1e-12)


def test_interpolate_endpoints():
    H_i, H_f = paper_pair(J=1.0)
    assert_allclose(interpolate(H_i, H_f, 0.0), H_i)
    assert_allclose(interpolate(H_i, H_f, 0.5), np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        interpolate(H_i, H_f, 1.5)


def test_paper_compat_phases_match_the_angle_table():
    H_i, H_f = paper_pair()
    rows = phase_table(H_i, H_f, Schedule(T=10e-6, M=8, J=J_LAB, mode='paper-compat'))
    assert [row.m for row in rows] == list(range(1, 9))
    for row in rows:
        assert_allclose(row.moduli, [1.0, 1.0], atol=1e-12)
        assert row.turns[0] == pytest.approx(-1.25, abs=1e-4)
        assert row.turns[1] == pytest.approx(-1.25 * (2 * row.m / 8 - 1), abs=1e-4)
    assert rows[0].turns[1] == pytest.approx(0.9375, abs=1e-4)
    assert rows[1].turns[1] == pytest.approx(0.6250, abs=1e-4)
    assert rows[-1].turns[1] == pytest.approx(-1.25, abs=1e-4)
    assert len(render_phase_table(rows).splitlines()) == 9


def test_diagonal_evolution_keeps_populations():
    H_i, H_f = paper_pair()
    schedule = Schedule(T=10e-6, M=8, J=J_LAB, mode='paper-compat')
    run = evolve(initial_state(1, 'paper-compat'), step_unitaries(H_i, H_f, schedule), schedule)
    assert len(run.trajectory) == 9
    for state in run.trajectory:
        assert_allclose(state.probabilities(), [0.0, 1.0], atol=1e-12)


def test_evolve_rejects_wrong_dimension():
    schedule = Schedule(T=1.0, M=1, J=1.0)
    with pytest.raises(DimensionMismatch):
        evolve(StateVector.basis(1, 0), [np.eye(4)], schedule)


def test_step_unitaries_are_unitary():
    _, H_i, H_f = peng_pair(35, (3, 3))
    schedule = Schedule(T=1.0, M=5, J=1.0)
    unitaries = step_unitaries(H_i, H_f, schedule)
    assert len(unitaries) == 5
    for U in unitaries:
        assert_allclose(U.conj().T @ U, np.eye(4), atol=1e-10)


def test_degenerate_pair_has_no_runtime_bound():
    H_i, H_f = paper_pair(J=1.0)
    scan = gap_scan(H_i, H_f, 11)
    assert scan.degenerate
    assert scan.ground_degeneracy == 2
    gaps = scan.energies[:, 1] - scan.energies[:, 0]
    assert np.all(gaps[:-1] > 0)
    assert gaps[-1] == pytest.approx(0.0, abs=1e-12)
    assert_allclose(gaps, 2 * (1 - scan.s_values), atol=1e-12)
    with pytest.raises(DegenerateGap):
        runtime_bound(H_i, H_f, scan=scan)


def test_gap_tracks_the_first_level_outside_the_final_ground_space():
    _, H_i, H_f = peng_pair(35, (3, 3))
    scan = gap_scan(H_i, H_f)
    assert scan.ground_degeneracy == 2
    assert not scan.degenerate
    assert scan.min_gap > 0
    assert scan.energies.shape == (101, 4)


def test_runtime_bound_for_15():
    _, H_i, H_f = peng_pair(15, (2, 3))
    scan = gap_scan(H_i, H_f)
    assert scan.min_gap == pytest.approx(2.0, abs=1e-9)
    assert scan.min_gap_s == 0.0
    T = runtime_bound(H_i, H_f, epsilon=0.1, scan=scan)
    assert 85 < T < 95


def test_auto_schedule_scales_the_bound():
    _, H_i, H_f = peng_pair(15, (2, 3))
    scan = gap_scan(H_i, H_f)
    bound = runtime_bound(H_i, H_f, 0.1, scan=scan)
    schedule = auto_schedule(H_i, H_f, J=1.0, epsilon=0.1, time_factor=4.0,
                             base_steps=8, max_steps=4096, scan=scan)
    assert schedule.T == pytest.approx(4 * bound)
    assert 8 <= schedule.M <= 4096
    assert schedule.mode == 'transverse'


@pytest.mark.parametrize("N", [15, 21])
def test_slow_evolution_reaches_the_ground_state(N):
    H_p, H_i, H_f = peng_pair(N, (2, 3))
    ground = ground_states(H_p).states
    bound = runtime_bound(H_i, H_f, 0.1)
    populations = []
    for k in (1, 2, 4):
        schedule = Schedule(T=k * bound, M=2000 * k, J=1.0)
        run = evolve(initial_state(1, 'transverse'), step_unitaries(H_i, H_f, schedule),
                     schedule, keep_trajectory=False)
        populations.append(run.ground_population(ground))
    p_T, p_2T, p_4T = populations
    tol = 1e-2
    assert p_T > 0.95
    assert p_T <= p_2T + tol <= p_4T + 2 * tol
    assert p_4T > 0.99
