import numpy as np
import pytest
import sympy as sp
from numpy.testing import assert_allclose

from src.python.bitplan import BiPrimeInstance, BitVar, enumerate_splits
from src.python.errors import DimensionMismatch, EncodingUnsupported, Inconsistent
from src.python.hamcomp import (
    QubitMap, ZPolynomial, bit_operator, build_qubit_map, compile, compile_peng,
    decode_basis_state, ground_states, pauli_reduce, to_operator, walsh_transform, z_symbol,
)
from src.python.reducer import ResidualEquation, reduce_split


def test_bit_operator_eigenvalues():
    A = bit_operator(0, 1)
    assert A.eigenvalue(0) == 0
    assert A.eigenvalue(1) == 1
    assert_allclose(A.diagonal(), [0.0, 1.0])


def test_z_products_cancel():
    Z0 = ZPolynomial.z(2, 0)
    assert Z0 * Z0 == ZPolynomial.identity(2)
    assert (Z0 * ZPolynomial.z(2, 1)).coefficient({0, 1}) == 1


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        ZPolynomial(1, {frozenset([1]): 1})
    with pytest.raises(DimensionMismatch):
        ZPolynomial.z(1, 0) + ZPolynomial.z(2, 0)
    with pytest.raises(DimensionMismatch):
        ZPolynomial.from_diagonal(np.ones(3))


def test_walsh_round_trip():
    rng = np.random.default_rng(7)
    values = rng.integers(-20, 20, size=8).astype(float)
    H = ZPolynomial.from_diagonal(values)
    assert H.n_qubits == 3
    assert_allclose(H.diagonal(), values, atol=1e-12)
    assert_allclose(walsh_transform([3.0, 1.0]), [2.0, 1.0])


def test_peng_hamiltonians_for_small_instances():
    H15, map15 = compile_peng(BiPrimeInstance(15), (2, 3))
    assert map15.n_qubits == 1
    assert_allclose(H15.diagonal(), [0.0, 36.0])

    H21, _ = compile_peng(BiPrimeInstance(21), (2, 3))
    assert_allclose(H21.diagonal(), [36.0, 0.0])


def test_peng_hamiltonian_for_35():
    H, qubit_map = compile_peng(BiPrimeInstance(35), (3, 3))
    assert qubit_map.qubit_of(BitVar.parse('p1')) == 0
    assert qubit_map.qubit_of(BitVar.parse('q1')) == 1
    assert_allclose(H.diagonal(), [100.0, 0.0, 0.0, 196.0])
    gs = ground_states(H)
    assert gs.min_eigenvalue == 0.0
    assert gs.states == [1, 2]


def test_35_shared_encoding_is_the_identity():
    reduced = reduce_split(BiPrimeInstance(35), (3, 3), encoding='paper-compat')
    H, qubit_map = compile(reduced)
    assert qubit_map.shared
    assert qubit_map.n_qubits == 1
    assert H.to_dict() == {'n_qubits': 1, 'terms': [{'z': [], 'coeff': 1.0}]}
    assert ground_states(H).states == [0, 1]
    assert decode_basis_state(0, reduced, qubit_map) == [(5, 7)]
    assert decode_basis_state(1, reduced, qubit_map) == [(7, 5)]


def test_35_distinct_qubits_keep_the_relation():
    reduced = reduce_split(BiPrimeInstance(35), (3, 3), encoding='paper-compat')
    H, qubit_map = compile(reduced, shared=False)
    assert qubit_map.n_qubits == 2
    assert_allclose(H.diagonal(), [1.0, 0.0, 0.0, 1.0])


def test_35_substitution_uses_one_qubit():
    reduced = reduce_split(BiPrimeInstance(35), (3, 3))
    H, qubit_map = compile(reduced)
    assert qubit_map.n_qubits == 1
    assert H.is_zero()
    assert ground_states(H).states == [0, 1]


@pytest.mark.parametrize("N", [15, 21, 35, 143])
@pytest.mark.parametrize("encoding", ['substitution', 'paper-compat'])
def test_ground_states_are_the_factorizations(N, encoding, split_factorizations):
    instance = BiPrimeInstance(N)
    for split in enumerate_splits(instance):
        expected = split_factorizations(N, split)
        try:
            reduced = reduce_split(instance, split, encoding=encoding)
        except Inconsistent:
            assert expected == set()
            continue
        H, qubit_map = compile(reduced, shared=False)
        gs = ground_states(H)
        if gs.min_eigenvalue > 1e-9:
            assert expected == set()
            continue
        decoded = set()
        for index in gs.states:
            decoded.update(decode_basis_state(index, reduced, qubit_map))
        assert decoded == expected


def test_shared_encoding_rejects_carry_residuals():
    reduced = reduce_split(BiPrimeInstance(35), (3, 3), encoding='paper-compat')
    c3 = BitVar.parse('C3')
    del reduced.fixed[c3]
    reduced.free_vars.append(c3)
    reduced.domains[c3] = (0, 1)
    reduced.residual_equations.append(ResidualEquation(2, c3.symbol - 1))

    with pytest.raises(EncodingUnsupported):
        compile(reduced)

    H, qubit_map = compile(reduced, shared=False)
    assert qubit_map.n_qubits == 2
    assert ground_states(H).states == [1, 2]


def test_qubit_map_round_trip():
    reduced = reduce_split(BiPrimeInstance(143), (4, 4))
    qubit_map = build_qubit_map(reduced)
    assert not qubit_map.shared
    assert type(qubit_map).from_dict(qubit_map.to_dict()) == qubit_map


def test_coefficients_stay_exact():
    reduced = reduce_split(BiPrimeInstance(35), (3, 3), encoding='paper-compat')
    H, _ = compile(reduced, shared=False)
    assert all(isinstance(c, sp.Rational) for c in H.terms.values())
    assert H.coefficient({0, 1}) == sp.Rational(1, 2)


def test_pauli_reduction_squares_to_identity():
    z0, z1 = z_symbol(0), z_symbol(1)
    assert pauli_reduce((z0 * z1) ** 2) == 1
    assert pauli_reduce(z0 ** 3 * z1) == z0 * z1
    assert pauli_reduce((1 - z0) ** 2 / 4) == (1 - z0) / 2


def test_shared_qubit_makes_the_product_a_single_bit():
    p1, q1 = BitVar.parse('p1'), BitVar.parse('q1')
    shared = QubitMap({p1: 0, q1: 0}, 1, True)
    assert to_operator(p1.symbol * q1.symbol, shared) == bit_operator(0, 1)
    assert to_operator(p1.symbol + q1.symbol - 1, shared) == ZPolynomial.z(1, 0, -1)


def test_to_operator_needs_a_qubit_for_every_bit():
    p1, q1 = BitVar.parse('p1'), BitVar.parse('q1')
    with pytest.raises(EncodingUnsupported):
        to_operator(p1.symbol + q1.symbol, QubitMap({p1: 0}, 1))
