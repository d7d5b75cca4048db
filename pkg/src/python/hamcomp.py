"""
Problem Hamiltonian compiler.

Bits map to operators A_i = (I - Z_i) / 2 by substituting sympy symbols
z_i into the residual expressions; Z_i^2 = I reduces every power.
Residual equations are squared and summed. Coefficients stay exact
sympy rationals until `diagonal()`.
"""
from dataclasses import dataclass
from functools import lru_cache
from numbers import Real
from typing import Dict, FrozenSet, List, Mapping, NamedTuple, Optional, Tuple

import numpy as np
import sympy as sp

from .bitplan import (
    BiPrimeInstance, BitVar, Side, Split, build_system, evaluate, variables_of,
)
from .errors import DimensionMismatch, EncodingUnsupported, TooLarge
from .reducer import ReducedSystem

DENSE_QUBIT_CAP = 20
GROUND_TOLERANCE = 1e-9

ZTerm = FrozenSet[int]


@lru_cache(maxsize=None)
def z_symbol(qubit: int) -> sp.Symbol:
    return sp.Symbol(f"z{qubit}", real=True)


def pauli_reduce(expr) -> sp.Expr:
    """Expand and apply Z_i^2 = I."""
    expr = sp.expand(expr)
    powers = {
        power: (power.base if power.exp % 2 else sp.Integer(1))
        for power in expr.atoms(sp.Pow) if power.base.is_Symbol
    }
    return expr.xreplace(powers) if powers else expr


class ZPolynomial:
    """Diagonal operator sum_S coeff_S prod_{i in S} Z_i on `n_qubits` qubits."""

    __slots__ = ('n_qubits', 'expr', '_terms')

    def __init__(self, n_qubits: int, terms: Mapping[ZTerm, Real] = None):
        self.n_qubits = int(n_qubits)
        cleaned: Dict[ZTerm, sp.Expr] = {}
        for support, coeff in (terms or {}).items():
            support = frozenset(support)
            if any(not 0 <= i < self.n_qubits for i in support):
                raise DimensionMismatch(f"term {sorted(support)} outside {self.n_qubits} qubits")
            coeff = sp.sympify(coeff)
            if not coeff.is_finite:
                raise ValueError(f"non-finite coefficient on {sorted(support)}")
            if coeff != 0:
                cleaned[support] = coeff
        self._terms = cleaned
        self.expr = sp.Add(*(c * sp.Mul(*(z_symbol(i) for i in sorted(s)))
                             for s, c in cleaned.items()))

    @classmethod
    def from_expr(cls, n_qubits: int, expr) -> 'ZPolynomial':
        """Read the terms of a Pauli-reduced expression in z_0 .. z_{n-1}."""
        expr = sp.sympify(expr)
        gens = [z_symbol(i) for i in range(n_qubits)]
        stray = expr.free_symbols - set(gens)
        if stray:
            raise DimensionMismatch(f"{sorted(map(str, stray))} outside {n_qubits} qubits")
        if not gens:
            return cls(0, {frozenset(): expr})
        terms = {
            frozenset(i for i, e in enumerate(exponents) if e): coeff
            for exponents, coeff in sp.Poly(expr, *gens).terms()
        }
        return cls(n_qubits, terms)

    @classmethod
    def identity(cls, n_qubits: int, coeff: Real = 1) -> 'ZPolynomial':
        return cls(n_qubits, {frozenset(): coeff})

    @classmethod
    def z(cls, n_qubits: int, qubit: int, coeff: Real = 1) -> 'ZPolynomial':
        return cls(n_qubits, {frozenset([qubit]): coeff})

    @classmethod
    def from_diagonal(cls, diagonal: np.ndarray, tolerance: float = 1e-12) -> 'ZPolynomial':
        """Walsh-Hadamard expansion of a real diagonal of length 2^n."""
        values = np.asarray(diagonal, dtype=float)
        n = int(round(np.log2(len(values)))) if len(values) else 0
        if 2 ** n != len(values):
            raise DimensionMismatch(f"diagonal length {len(values)} is not a power of two")
        coeffs = walsh_transform(values)
        scale = max(1.0, float(np.max(np.abs(values)))) if len(values) else 1.0
        terms = {
            frozenset(i for i in range(n) if (s >> i) & 1): float(c)
            for s, c in enumerate(coeffs) if abs(c) > tolerance * scale
        }
        return cls(n, terms)

    # ==================== Views ====================

    @property
    def terms(self) -> Dict[ZTerm, sp.Expr]:
        return dict(self._terms)

    def items(self) -> List[Tuple[ZTerm, sp.Expr]]:
        return sorted(self._terms.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))

    def coefficient(self, support) -> sp.Expr:
        return self._terms.get(frozenset(support), sp.Integer(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_identity_multiple(self) -> bool:
        return all(not s for s in self._terms)

    # ==================== Algebra ====================

    def _check(self, other: 'ZPolynomial'):
        if other.n_qubits != self.n_qubits:
            raise DimensionMismatch(f"{self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other: 'ZPolynomial') -> 'ZPolynomial':
        self._check(other)
        return ZPolynomial.from_expr(self.n_qubits, self.expr + other.expr)

    def __sub__(self, other: 'ZPolynomial') -> 'ZPolynomial':
        self._check(other)
        return ZPolynomial.from_expr(self.n_qubits, self.expr - other.expr)

    def scale(self, factor: Real) -> 'ZPolynomial':
        return ZPolynomial.from_expr(self.n_qubits, sp.expand(self.expr * sp.sympify(factor)))

    def __mul__(self, other) -> 'ZPolynomial':
        if not isinstance(other, ZPolynomial):
            return self.scale(other)
        self._check(other)
        return ZPolynomial.from_expr(self.n_qubits, pauli_reduce(self.expr * other.expr))

    __rmul__ = __mul__

    def square(self) -> 'ZPolynomial':
        return self * self

    def __eq__(self, other) -> bool:
        return (isinstance(other, ZPolynomial) and self.n_qubits == other.n_qubits
                and self._terms == other._terms)

    def __repr__(self) -> str:
        return f"ZPolynomial(n={self.n_qubits}: {self.expr})"

    # ==================== Evaluation ====================

    def eigenvalue(self, basis_index: int) -> sp.Expr:
        """Exact eigenvalue on |x>, qubit 0 least significant."""
        signs = {z_symbol(i): sp.Integer(1 - 2 * ((basis_index >> i) & 1)) for i in range(self.n_qubits)}
        return self.expr.xreplace(signs)

    def diagonal(self) -> np.ndarray:
        idx = np.arange(2 ** self.n_qubits)
        diag = np.zeros(len(idx), dtype=float)
        for s, c in self._terms.items():
            sign = np.ones(len(idx))
            for i in s:
                sign *= 1 - 2 * ((idx >> i) & 1)
            diag += float(c) * sign
        return diag

    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal()).astype(complex)

    # ==================== Serialization ====================

    def to_dict(self) -> dict:
        return {
            'n_qubits': self.n_qubits,
            'terms': [{'z': sorted(s), 'coeff': float(c)} for s, c in self.items()],
        }


def walsh_transform(values: np.ndarray) -> np.ndarray:
    """Coefficients c_S with values[x] = sum_S c_S (-1)^{|S & x|}."""
    a = np.asarray(values, dtype=float).copy()
    h = 1
    while h < len(a):
        a = a.reshape(-1, 2, h)
        a = np.stack((a[:, 0, :] + a[:, 1, :], a[:, 0, :] - a[:, 1, :]), axis=1).reshape(-1)
        h *= 2
    return a / max(len(a), 1)


def bit_operator(qubit: int, n_qubits: int) -> ZPolynomial:
    """A = I/2 - Z/2: eigenvalue 0 on |0>, 1 on |1>."""
    if not 0 <= qubit < n_qubits:
        raise DimensionMismatch(f"qubit {qubit} outside {n_qubits} qubits")
    return ZPolynomial.from_expr(n_qubits, (1 - z_symbol(qubit)) / 2)


@dataclass(frozen=True)
class QubitMap:
    """Free factor bits to qubits; `shared` lets p_i and q_i sit on one qubit."""
    assignment: Dict[BitVar, int]
    n_qubits: int
    shared: bool = False

    def qubit_of(self, var: BitVar) -> int:
        return self.assignment[var]

    def vars_on(self, qubit: int) -> List[BitVar]:
        return sorted(v for v, qb in self.assignment.items() if qb == qubit)

    def to_dict(self) -> dict:
        return {
            'n_qubits': self.n_qubits,
            'shared': self.shared,
            'assignment': {v.name: self.assignment[v] for v in sorted(self.assignment)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'QubitMap':
        return cls({BitVar.parse(k): int(v) for k, v in d['assignment'].items()},
                   int(d['n_qubits']), bool(d.get('shared', False)))


def build_qubit_map(reduced: ReducedSystem, shared: Optional[bool] = None) -> QubitMap:
    """Qubits for the free factor bits, P bits before Q bits unless shared."""
    if shared is None:
        shared = reduced.encoding == 'paper-compat'
    bits = reduced.free_factor_bits()
    if shared:
        indices = sorted({v.index for v in bits})
        slot = {index: qb for qb, index in enumerate(indices)}
        return QubitMap({v: slot[v.index] for v in bits}, len(indices), True)
    return QubitMap({v: qb for qb, v in enumerate(sorted(bits))}, len(bits), False)


def to_operator(expr, qubit_map: QubitMap) -> ZPolynomial:
    """Substitute A = (1 - z) / 2 for each bit and reduce."""
    mapping = {}
    for var in variables_of(expr):
        if var not in qubit_map.assignment:
            raise EncodingUnsupported(f"{var} has no qubit")
        mapping[var.symbol] = (1 - z_symbol(qubit_map.qubit_of(var))) / 2
    return ZPolynomial.from_expr(qubit_map.n_qubits, pauli_reduce(sp.sympify(expr).xreplace(mapping)))


def _side_expr(bits: List[BitVar], known: Mapping[BitVar, sp.Expr]) -> sp.Expr:
    return sp.Add(*(known.get(var, var.symbol) * 2 ** var.index for var in bits))


def factor_polynomials(reduced: ReducedSystem) -> Tuple[sp.Expr, sp.Expr]:
    """P and Q written over the free factor bits."""
    known = {**{v: sp.Integer(x) for v, x in reduced.fixed.items()}, **reduced.substitutions}
    system = reduced.system()
    return _side_expr(system.p_bits(), known), _side_expr(system.q_bits(), known)


def compile(reduced: ReducedSystem, shared: Optional[bool] = None,
            verbose: bool = False) -> Tuple[ZPolynomial, QubitMap]:
    """
    H_p = sum of squared residuals over the free factor bits.

    Residuals that still hold a free carry are replaced by one closure term
    ((N - P Q) / 2^k)^2, k the lowest such column, so carries never take qubits.

    Raises:
        NonBinaryResidual: a substitution can leave {0, 1}
        EncodingUnsupported: shared qubits asked to encode a carry residual
    """
    reduced.check_binarity()
    qubit_map = build_qubit_map(reduced, shared)
    cost = sp.Integer(0)
    with_carry = []
    for residual in reduced.residual_equations:
        if any(v.side is Side.CARRY for v in variables_of(residual.poly)):
            with_carry.append(residual)
            continue
        cost += residual.poly ** 2
    if with_carry:
        if qubit_map.shared:
            raise EncodingUnsupported(
                "shared-qubit encoding cannot express residuals with free carries: "
                + '; '.join(r.render() for r in with_carry))
        k = min(r.column for r in with_carry)
        P, Q = factor_polynomials(reduced)
        cost += ((reduced.N - P * Q) / sp.Integer(2) ** k) ** 2
    hamiltonian = to_operator(cost, qubit_map)
    if verbose:
        print(f"[Hamiltonian] {qubit_map.n_qubits} qubits, {len(hamiltonian.terms)} terms"
              + (f", carry closure over {len(with_carry)} residuals" if with_carry else ""))
    return hamiltonian, qubit_map


def compile_peng(instance: BiPrimeInstance, split: Split,
                 cap: int = DENSE_QUBIT_CAP) -> Tuple[ZPolynomial, QubitMap]:
    """Unreduced (N - P Q)^2 over every open factor bit of the split."""
    system = build_system(instance, split)
    open_bits = system.open_factor_bits()
    if len(open_bits) > cap:
        raise TooLarge(f"{len(open_bits)} open factor bits exceed {cap}")
    qubit_map = QubitMap({v: qb for qb, v in enumerate(sorted(open_bits))}, len(open_bits))
    known = {v: sp.Integer(x) for v, x in system.initial_fixed().items()}
    P = _side_expr(system.p_bits(), known)
    Q = _side_expr(system.q_bits(), known)
    return to_operator((instance.N - P * Q) ** 2, qubit_map), qubit_map


class GroundStates(NamedTuple):
    min_eigenvalue: float
    states: List[int]


def ground_states(hamiltonian: ZPolynomial, cap: int = DENSE_QUBIT_CAP,
                  tolerance: float = GROUND_TOLERANCE) -> GroundStates:
    """Minimum of the diagonal and every basis index attaining it."""
    if hamiltonian.n_qubits > cap:
        raise TooLarge(f"{hamiltonian.n_qubits} qubits exceed the dense cap {cap}")
    diag = hamiltonian.diagonal()
    lowest = float(diag.min())
    scale = max(1.0, abs(lowest))
    states = np.flatnonzero(diag <= lowest + tolerance * scale).tolist()
    return GroundStates(lowest, states)


def decode_basis_state(index: int, reduced: ReducedSystem,
                       qubit_map: QubitMap) -> List[Tuple[int, int]]:
    """
    Factor pairs (P, Q) encoded by basis state |index>.

    With shared qubits the qubit value sets the P-side bit; Q-side bits on the
    same qubit are solved from the carry-free residual equations.
    """
    free: Dict[BitVar, int] = {}
    open_vars: List[BitVar] = []
    for qb in range(qubit_map.n_qubits):
        value = (index >> qb) & 1
        on_qubit = qubit_map.vars_on(qb)
        free[on_qubit[0]] = value
        if qubit_map.shared:
            open_vars.extend(on_qubit[1:])
        else:
            for var in on_qubit[1:]:
                free[var] = value

    carry_free = [r for r in reduced.residual_equations
                  if all(v.side is not Side.CARRY for v in variables_of(r.poly))]
    pairs: List[Tuple[int, int]] = []
    for bits in range(2 ** len(open_vars)):
        trial = dict(free)
        trial.update({v: (bits >> i) & 1 for i, v in enumerate(open_vars)})
        if open_vars:
            scope = {**reduced.fixed, **trial}
            if any(evaluate(r.poly, scope) != 0 for r in carry_free):
                continue
        pair = reduced.lift_factors(trial)
        if pair not in pairs:
            pairs.append(pair)
    return pairs
