"""
Binary multiplication tables and column-wise carry equations.

For a split (b_p, b_q) column c of P * Q reads

    sum_l p_{c-l} q_l + C_c - 2 C_{c+1} = n_c

with cumulative carries C_c. Bits are stored least-significant first;
only the text table reverses them for display.

Equations are sympy expressions over one symbol per variable. Factor bits
obey x**2 = x after expansion; carries may appear only linearly.
"""
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache, total_ordering
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

import sympy as sp

from .errors import InvalidInstance

Split = Tuple[int, int]

MAX_N = 2 ** 64


class Side(str, Enum):
    P = 'p'
    Q = 'q'
    CARRY = 'C'

    @property
    def rank(self) -> int:
        return {'p': 0, 'q': 1, 'C': 2}[self.value]


class VarState(str, Enum):
    FREE = 'free'
    FIXED_0 = 'fixed-0'
    FIXED_1 = 'fixed-1'
    SUBSTITUTED = 'substituted'


@total_ordering
@dataclass(frozen=True)
class BitVar:
    """A factor bit p_k, q_l or a cumulative carry C_c."""
    side: Side
    index: int
    state: VarState = field(default=VarState.FREE, compare=False)

    @property
    def binary(self) -> bool:
        return self.side is not Side.CARRY

    @property
    def name(self) -> str:
        return f"{self.side.value}{self.index}"

    @property
    def symbol(self) -> sp.Symbol:
        return _symbol(self.name)

    def with_state(self, state: VarState) -> 'BitVar':
        return replace(self, state=state)

    def __lt__(self, other: 'BitVar') -> bool:
        return (self.side.rank, self.index) < (other.side.rank, other.index)

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, name: str) -> 'BitVar':
        return cls(Side(name[0]), int(name[1:]))


def p(k: int) -> BitVar:
    return BitVar(Side.P, k)


def q(l: int) -> BitVar:
    return BitVar(Side.Q, l)


def carry(c: int) -> BitVar:
    return BitVar(Side.CARRY, c)


# ==================== Bit expressions ====================

BitTerms = Tuple[Tuple[Tuple[BitVar, ...], int], ...]
Replacement = Union[int, sp.Expr]


@lru_cache(maxsize=None)
def _symbol(name: str) -> sp.Symbol:
    return sp.Symbol(name, integer=True, nonnegative=True)


@lru_cache(maxsize=None)
def _parse_name(name: str) -> BitVar:
    return BitVar.parse(name)


def bitvar_of(symbol: sp.Symbol) -> BitVar:
    return _parse_name(symbol.name)


def bit_expand(expr: Replacement) -> sp.Expr:
    """
    Expand and apply x**2 = x to every factor bit.

    Raises:
        ValueError: if a carry ends up squared
    """
    expr = sp.expand(sp.sympify(expr))
    squares = {}
    for power in expr.atoms(sp.Pow):
        if not power.base.is_Symbol:
            continue
        if not bitvar_of(power.base).binary:
            raise ValueError(f"non-binary variable squared: {power}")
        squares[power] = power.base
    return expr.xreplace(squares) if squares else expr


@lru_cache(maxsize=1 << 16)
def _terms(expr: sp.Expr) -> BitTerms:
    symbols = sorted(expr.free_symbols, key=bitvar_of)
    if not symbols:
        value = int(expr)
        return (((), value),) if value else ()
    terms = []
    for exponents, coeff in sp.Poly(expr, *symbols).terms():
        monomial = tuple(bitvar_of(s) for s, e in zip(symbols, exponents) if e)
        terms.append((monomial, int(coeff)))
    return tuple(sorted(terms, key=lambda t: (len(t[0]), t[0])))


def bit_terms(expr: Replacement) -> BitTerms:
    """(variables, coefficient) per monomial: by degree, then by variables."""
    return _terms(sp.sympify(expr))


def variables_of(expr: Replacement) -> FrozenSet[BitVar]:
    return frozenset(bitvar_of(s) for s in sp.sympify(expr).free_symbols)


def constant_term(expr: Replacement) -> int:
    terms = bit_terms(expr)
    return terms[0][1] if terms and not terms[0][0] else 0


def linear_coefficient(expr: Replacement, var: BitVar) -> int:
    return dict(bit_terms(expr)).get((var,), 0)


def occurs_only_linearly(expr: Replacement, var: BitVar) -> bool:
    return all(m == (var,) or var not in m for m, _ in bit_terms(expr))


def is_affine(expr: Replacement) -> bool:
    return all(len(m) <= 1 for m, _ in bit_terms(expr))


def substitute(expr: Replacement, mapping: Mapping[BitVar, Replacement]) -> sp.Expr:
    """Replace variables simultaneously by integers or expressions."""
    expr = sp.sympify(expr)
    present = {v: r for v, r in mapping.items() if v.symbol in expr.free_symbols}
    if not present:
        return expr
    return bit_expand(expr.xreplace({v.symbol: sp.sympify(r) for v, r in present.items()}))


def evaluate(expr: Replacement, assignment: Mapping[BitVar, int]) -> int:
    total = 0
    for monomial, coeff in bit_terms(expr):
        value = coeff
        for var in monomial:
            value *= assignment[var]
            if not value:
                break
        total += value
    return total


def value_range(expr: Replacement, domains: Mapping[BitVar, Tuple[int, int]]) -> Tuple[int, int]:
    """Interval bound over the box `domains` (exact for affine expressions)."""
    lo = hi = 0
    for monomial, coeff in bit_terms(expr):
        # domains are non-negative, so a product spans [prod(lo), prod(hi)]
        a = b = 1
        for var in monomial:
            va, vb = domains[var]
            a *= va
            b *= vb
        low, high = sorted((coeff * a, coeff * b))
        lo += low
        hi += high
    return lo, hi


def content(expr: Replacement) -> int:
    """gcd of the non-constant coefficients (0 for a constant)."""
    coeffs = [c for m, c in bit_terms(expr) if m]
    return abs(int(sp.gcd_list(coeffs))) if coeffs else 0


@lru_cache(maxsize=1 << 16)
def _normalized(expr: sp.Expr) -> sp.Expr:
    symbols = sorted(expr.free_symbols, key=bitvar_of)
    if not symbols:
        return sp.Integer(1) if expr else expr
    _, primitive = sp.Poly(expr, *symbols).primitive()
    expr = primitive.as_expr()
    return -expr if bit_terms(expr)[-1][1] < 0 else expr


def normalized(expr: Replacement) -> sp.Expr:
    """Divide by the common gcd and make the leading coefficient positive."""
    return _normalized(sp.sympify(expr))


def render(expr: Replacement) -> str:
    """E.g. `-C2 + 2p1*q1`; the constant goes last."""
    terms = bit_terms(expr)
    if not terms:
        return '0'
    pieces: List[str] = []
    for monomial, coeff in sorted(terms, key=lambda t: (not t[0], len(t[0]), t[0])):
        body = '*'.join(v.name for v in monomial)
        magnitude = abs(coeff)
        if body:
            text = body if magnitude == 1 else f"{magnitude}{body}"
        else:
            text = str(magnitude)
        if not pieces:
            pieces.append(text if coeff > 0 else f"-{text}")
        else:
            pieces.append(f"{'+' if coeff > 0 else '-'} {text}")
    return ' '.join(pieces)


def to_terms(expr: Replacement) -> List[dict]:
    return [{'vars': [v.name for v in m], 'coeff': c} for m, c in bit_terms(expr)]


def from_terms(terms: Iterable[dict]) -> sp.Expr:
    return sp.Add(*(
        sp.Integer(int(t['coeff'])) * sp.Mul(*(BitVar.parse(name).symbol for name in t['vars']))
        for t in terms
    ))


@dataclass(frozen=True)
class BiPrimeInstance:
    """Odd composite N that is not a perfect square."""
    N: int

    def __post_init__(self):
        n = self.N
        if isinstance(n, bool) or not isinstance(n, int):
            raise InvalidInstance(f"N must be an integer, got {n!r}")
        if n < 9:
            raise InvalidInstance(f"N={n} is below 9")
        if n % 2 == 0:
            raise InvalidInstance(f"N={n} is even")
        if n >= MAX_N:
            raise InvalidInstance(f"N={n} exceeds 64 bits")
        if math.isqrt(n) ** 2 == n:
            raise InvalidInstance(f"N={n} is a perfect square")

    @property
    def b_n(self) -> int:
        return self.N.bit_length()

    @property
    def n_bits(self) -> List[int]:
        return [(self.N >> j) & 1 for j in range(self.b_n)]


@dataclass(frozen=True)
class ColumnEquation:
    """sum(p[k] q[l] for (k, l) in products) + C_c - 2 C_{c+1} = n_c"""
    c: int
    products: Tuple[Tuple[int, int], ...]
    in_carry: BitVar
    out_carry: BitVar
    target: int

    @property
    def product_count(self) -> int:
        return len(self.products)

    def left_side(self) -> sp.Expr:
        return sp.Add(*(p(k).symbol * q(l).symbol for k, l in self.products)) + self.in_carry.symbol

    def right_side(self) -> sp.Expr:
        return self.target + 2 * self.out_carry.symbol

    def polynomial(self) -> sp.Expr:
        """Left side minus right side, zero when the column holds."""
        return sp.expand(self.left_side() - self.right_side())

    def residual(self, assignment: Dict[BitVar, int]) -> int:
        return evaluate(self.polynomial(), assignment)

    def render(self, fixed: Optional[Dict[BitVar, int]] = None) -> str:
        """E.g. `p1 + q1 + C1 = 2C2 + 1`, with fixed values folded in."""
        fixed = fixed or {}
        left = substitute(self.left_side(), fixed)
        right = substitute(self.right_side(), fixed)
        return f"{render(left)} = {render(right)}"


@dataclass(frozen=True)
class BitEquationSystem:
    """Column equations of one split plus the bits fixed at construction."""
    instance: BiPrimeInstance
    split: Split
    equations: Tuple[ColumnEquation, ...]
    variables: Dict[str, BitVar]

    @property
    def b_p(self) -> int:
        return self.split[0]

    @property
    def b_q(self) -> int:
        return self.split[1]

    @property
    def case(self) -> str:
        return 'A' if sum(self.split) == self.instance.b_n else 'B'

    @property
    def terminal_column(self) -> int:
        """Index of the carry leaving the last column."""
        return self.b_p + self.b_q - 1

    @property
    def terminal_carry(self) -> int:
        return 1 if self.case == 'A' else 0

    def p_bits(self) -> List[BitVar]:
        return [p(k) for k in range(self.b_p)]

    def q_bits(self) -> List[BitVar]:
        return [q(l) for l in range(self.b_q)]

    def carries(self) -> List[BitVar]:
        return [carry(c) for c in range(self.terminal_column + 1)]

    def initial_fixed(self) -> Dict[BitVar, int]:
        """p_0 = q_0 = p_top = q_top = 1, C_0 = 0 and the terminal carry."""
        fixed: Dict[BitVar, int] = {}
        for v in self.variables.values():
            if v.state is VarState.FIXED_1:
                fixed[BitVar(v.side, v.index)] = 1
            elif v.state is VarState.FIXED_0:
                fixed[BitVar(v.side, v.index)] = 0
        return fixed

    def open_factor_bits(self) -> List[BitVar]:
        fixed = self.initial_fixed()
        return [v for v in self.p_bits() + self.q_bits() if v not in fixed]

    def is_satisfied(self, assignment: Dict[BitVar, int]) -> bool:
        return all(eq.residual(assignment) == 0 for eq in self.equations)


def enumerate_splits(instance: BiPrimeInstance) -> List[Split]:
    """
    Candidate factor bit lengths (b_p, b_q), b_p <= b_q.

    Case A (b_p + b_q = b_n) first, then Case B (b_p + b_q = b_n + 1);
    b_p ascending within each case.
    """
    b_n = instance.b_n
    splits: List[Split] = []
    for total in (b_n, b_n + 1):
        for b_p in range(2, total // 2 + 1):
            splits.append((b_p, total - b_p))
    return splits


def build_system(instance: BiPrimeInstance, split: Split) -> BitEquationSystem:
    b_p, b_q = split
    if not 2 <= b_p <= b_q or sum(split) not in (instance.b_n, instance.b_n + 1):
        raise InvalidInstance(f"split {split} is not admissible for N={instance.N}")

    n_bits = instance.n_bits
    last = b_p + b_q - 2
    equations = []
    for c in range(last + 1):
        c_min = max(0, c - b_p + 1)
        c_max = min(c, b_q - 1)
        products = tuple((c - l, l) for l in range(c_min, c_max + 1))
        equations.append(ColumnEquation(
            c=c,
            products=products,
            in_carry=carry(c),
            out_carry=carry(c + 1),
            target=n_bits[c],
        ))

    terminal = 1 if b_p + b_q == instance.b_n else 0
    variables: Dict[str, BitVar] = {}
    for k in range(b_p):
        state = VarState.FIXED_1 if k in (0, b_p - 1) else VarState.FREE
        variables[f"p{k}"] = p(k).with_state(state)
    for l in range(b_q):
        state = VarState.FIXED_1 if l in (0, b_q - 1) else VarState.FREE
        variables[f"q{l}"] = q(l).with_state(state)
    for c in range(last + 2):
        if c == 0:
            state = VarState.FIXED_0
        elif c == last + 1:
            state = VarState.FIXED_1 if terminal else VarState.FIXED_0
        else:
            state = VarState.FREE
        variables[f"C{c}"] = carry(c).with_state(state)

    return BitEquationSystem(instance, (b_p, b_q), tuple(equations), variables)


def factor_bits(value: int, length: int, side: Side) -> Dict[BitVar, int]:
    return {BitVar(side, i): (value >> i) & 1 for i in range(length)}


def implied_carries(system: BitEquationSystem, P: int, Q: int) -> Optional[List[int]]:
    """
    Solve each column for its outgoing carry given concrete factors.

    Returns:
        [C_0, ..., C_{b_p+b_q-1}], or None when a column has no integer
        solution or the terminal carry disagrees
    """
    if P.bit_length() != system.b_p or Q.bit_length() != system.b_q:
        return None
    bits = {**factor_bits(P, system.b_p, Side.P), **factor_bits(Q, system.b_q, Side.Q)}
    carries = [0]
    for eq in system.equations:
        total = sum(bits[p(k)] * bits[q(l)] for k, l in eq.products) + carries[-1] - eq.target
        if total < 0 or total % 2:
            return None
        carries.append(total // 2)
    if carries[-1] != system.terminal_carry:
        return None
    return carries


def full_assignment(system: BitEquationSystem, P: int, Q: int) -> Optional[Dict[BitVar, int]]:
    carries = implied_carries(system, P, Q)
    if carries is None:
        return None
    assignment = {**factor_bits(P, system.b_p, Side.P), **factor_bits(Q, system.b_q, Side.Q)}
    assignment.update({carry(c): v for c, v in enumerate(carries)})
    return assignment


# ==================== Table rendering ====================

def table_rows(system: BitEquationSystem) -> Dict[str, Dict[int, str]]:
    """Rows of the multiplication table keyed by column index."""
    rows: Dict[str, Dict[int, str]] = {
        'p': {k: f"p{k}" for k in range(system.b_p)},
        'q': {l: f"q{l}" for l in range(system.b_q)},
    }
    for l in range(system.b_q):
        rows[f"l={l}"] = {k + l: f"p{k}q{l}" for k in range(system.b_p)}
    rows['carries'] = {c: f"C{c}" for c in range(1, system.terminal_column + 1)}
    rows['N'] = {j: str(bit) for j, bit in enumerate(system.instance.n_bits)}
    return rows


def render_table(system: BitEquationSystem) -> str:
    """Plain-text multiplication table, most significant column on the left."""
    rows = table_rows(system)
    width = max(len(cell) for row in rows.values() for cell in row.values()) + 2
    columns = list(range(max(system.terminal_column, system.instance.b_n - 1), -1, -1))
    label_width = max(len(label) for label in rows) + 2
    lines = [' ' * label_width + ''.join(f"{c:>{width}}" for c in columns)]
    for label, row in rows.items():
        cells = ''.join(f"{row.get(c, ''):>{width}}" for c in columns)
        lines.append(f"{label:<{label_width}}{cells}")
    return '\n'.join(lines)


def table_json(system: BitEquationSystem) -> str:
    rows = table_rows(system)
    doc = {
        'N': system.instance.N,
        'split': list(system.split),
        'rows': {label: {str(c): cell for c, cell in sorted(row.items())}
                 for label, row in rows.items()},
        'equations': [eq.render() for eq in system.equations],
    }
    return json.dumps(doc, indent=2)
