import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.python.adia import StateVector
from src.python.bitplan import BiPrimeInstance
from src.python.errors import BasisMissing, NotAFactorization
from src.python.hamcomp import compile
from src.python.reducer import reduce_split
from src.python.tomo import (
    DensityMatrix1Q, MeasurementCounts, basis_probabilities, extract_factors,
    product_tomography, reconstruct, reconstruct_from_expectations, sample, sample_joint,
    seed_children, trajectory_tomography,
)

MINUS = StateVector(1, np.array([1, -1]) / np.sqrt(2))
PLUS_I = StateVector(1, np.array([1, 1j]) / np.sqrt(2))


@pytest.mark.parametrize("state, basis", [
    (StateVector.basis(1, 0), 'Z'),
    (StateVector.uniform(1), 'X'),
    (PLUS_I, 'Y'),
])
def test_eigenstates_read_zero(state, basis):
    counts = sample(state, basis, shots=500, seed=1)
    assert counts.counts == {'0': 500, '1': 0}
    assert counts.expectation() == 1.0


def test_minus_reads_one_in_x():
    counts = sample(MINUS, 'X', shots=200, seed=3)
    assert counts.counts['1'] == 200
    assert counts.expectation() == -1.0


def test_sampling_is_deterministic():
    a = sample(StateVector.uniform(1), 'Z', shots=1000, seed=42)
    b = sample(StateVector.uniform(1), 'Z', shots=1000, seed=42)
    assert a.counts == b.counts
    assert a.to_dict() == b.to_dict()


def test_sample_rejects_bad_arguments():
    with pytest.raises(ValueError):
        sample(MINUS, 'W')
    with pytest.raises(ValueError):
        sample(MINUS, 'Z', shots=0)


def test_basis_probabilities_for_y_eigenstate():
    rho = PLUS_I.reduced_density_matrix(0)
    assert_allclose(basis_probabilities(rho, 'Y'), [1.0, 0.0], atol=1e-12)
    assert_allclose(basis_probabilities(rho, 'X'), [0.5, 0.5], atol=1e-12)


def test_joint_keys_are_msb_first():
    counts = sample_joint(StateVector.basis(2, 1), shots=10, seed=0)
    assert counts.counts == {'01': 10}


@pytest.mark.parametrize("bloch", [(0, 0, 1), (1, 0, 0), (0, 1, 0), (0.3, -0.4, 0.5)])
def test_ideal_expectations_reconstruct_exactly(bloch):
    rx, ry, rz = bloch
    rho = reconstruct_from_expectations(rz, rx, ry)
    expected = DensityMatrix1Q.from_bloch(rx, ry, rz)
    assert np.max(np.abs(rho.matrix - expected.matrix)) < 1e-12
    assert_allclose(rho.bloch(), bloch, atol=1e-12)


def test_reconstruct_needs_every_basis():
    z = MeasurementCounts('Z', 10, {'0': 10, '1': 0}, qubit=0)
    x = MeasurementCounts('X', 10, {'0': 5, '1': 5}, qubit=0)
    with pytest.raises(BasisMissing):
        reconstruct(z, x, None)
    with pytest.raises(BasisMissing):
        reconstruct(z, x, x)
    y = MeasurementCounts('Y', 10, {'0': 5, '1': 5}, qubit=1)
    with pytest.raises(ValueError):
        reconstruct(z, x, y)


def test_unphysical_estimate_is_clamped():
    rho = reconstruct_from_expectations(1.0, 1.0, 0.0)
    assert not rho.within_floor
    clamped = rho.clamped()
    assert np.linalg.norm(clamped.bloch()) == pytest.approx(1.0)
    assert rho.distance_to_physical() > 0


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix1Q(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        DensityMatrix1Q(np.eye(2))


def test_tomography_accuracy_over_seeds():
    state = StateVector(1, np.array([np.cos(0.4), np.exp(0.9j) * np.sin(0.4)]))
    close = 0
    for seed in range(100):
        result = product_tomography(state, shots=8192, seed=seed)[0]
        if result.error <= 0.05:
            close += 1
    assert close >= 99


def test_seed_children_are_stable():
    first = [c.generate_state(1)[0] for c in seed_children(2020, 2)]
    second = [c.generate_state(1)[0] for c in seed_children(2020, 2)]
    assert len(first) == 7
    assert first == second


def test_trajectory_tomography_skips_the_initial_state():
    trajectory = [StateVector.basis(1, 1), MINUS, PLUS_I]
    results = trajectory_tomography(trajectory, shots=2000, seed=5)
    assert len(results) == 2
    assert results[0].estimate.bloch()[0] == pytest.approx(-1.0)
    assert results[1].estimate.bloch()[1] == pytest.approx(1.0)


def test_extract_factors_for_35():
    reduced = reduce_split(BiPrimeInstance(35), (3, 3), encoding='paper-compat')
    _, qubit_map = compile(reduced)
    for index in (0, 1):
        state = StateVector.basis(1, index)
        assert extract_factors(state, reduced, qubit_map=qubit_map) == (5, 7)
        counts = sample_joint(state, shots=100, seed=index)
        assert extract_factors(counts, reduced, qubit_map=qubit_map) == (5, 7)


def test_extract_factors_checks_arguments():
    reduced = reduce_split(BiPrimeInstance(35), (3, 3))
    with pytest.raises(ValueError):
        extract_factors(StateVector.basis(1, 0), reduced, instance=BiPrimeInstance(21))
    with pytest.raises(ValueError):
        extract_factors(StateVector.basis(1, 0), reduced, split=(2, 4))


def test_extract_factors_rejects_non_factors():
    reduced = reduce_split(BiPrimeInstance(35), (3, 3), encoding='paper-compat')
    reduced.residual_equations = []
    _, qubit_map = compile(reduced, shared=False)
    # |00> lifts to 5 * 5
    with pytest.raises(NotAFactorization):
        extract_factors(StateVector.basis(2, 0), reduced, qubit_map=qubit_map)
    assert extract_factors(np.array([0.0, 0.5, 0.5, 0.0]), reduced, qubit_map=qubit_map) == (5, 7)
