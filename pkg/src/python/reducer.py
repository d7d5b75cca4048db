"""
Classical reduction of the column equations.

Carry upper bounds are computed iteratively, then four rules run to a fixed
point over the equations:

    (a) boundary columns (0 and the last one) are visited first
    (b) exact local enumeration (interval bounds when too large) fixes
        pinned variables and tightens carry domains
    (c) parity: the equation read mod 2 fixes a bit or relates two bits
    (d) a variable occurring linearly with coefficient +-1 is replaced by
        the affine remainder

Substitution expressions keep coefficients in {-1, 0, 1}. The
`paper-compat` encoding never eliminates P/Q bits, so relations such as
p1 + q1 = 1 stay residual equations.
"""
import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from .bitplan import (
    BitEquationSystem, BitVar, Side, Split, BiPrimeInstance,
    bit_terms, build_system, constant_term, content, evaluate, from_terms, full_assignment,
    implied_carries, is_affine, linear_coefficient, normalized, occurs_only_linearly, render,
    substitute, to_terms, value_range, variables_of,
)
from .errors import Inconsistent, NonBinaryResidual, TooLarge

ENCODINGS = ('substitution', 'paper-compat')

# Largest local domain product handled by exact enumeration in rule (b)
LOCAL_ENUMERATION_CAP = 256
# Largest free-assignment space searched when pruning implied residuals
PRUNE_SPACE_CAP = 2 ** 16
VERIFY_BIT_CAP = 20

Domain = Tuple[int, int]


@dataclass(frozen=True)
class CarryBound:
    column: int
    lower: int
    upper: int


@dataclass(frozen=True)
class ResidualEquation:
    """Polynomial that must vanish; `column` is the equation it came from."""
    column: int
    poly: sp.Expr

    def render(self) -> str:
        return f"{render(self.poly)} = 0"

    def to_dict(self) -> dict:
        return {'column': self.column, 'terms': to_terms(self.poly), 'text': self.render()}


def carry_bounds(system: BitEquationSystem) -> List[CarryBound]:
    """
    Upper bounds on C_0 .. C_{b_p+b_q-1}.

    up(C_{c+1}) = floor((k_c + up(C_c) - n_c) / 2) with k_c the number of
    product terms in column c; the inner maximum ranges over integer C_c.
    """
    bounds = [CarryBound(0, 0, 0)]
    for eq in system.equations:
        upper = max(0, (eq.product_count + bounds[-1].upper - eq.target) // 2)
        bounds.append(CarryBound(eq.c + 1, 0, upper))
    return bounds


@dataclass
class ReducedSystem:
    """Fixed bits, substitutions and residual equations over the free variables."""
    N: int
    split: Split
    encoding: str
    fixed: Dict[BitVar, int]
    substitutions: Dict[BitVar, sp.Expr]
    residual_equations: List[ResidualEquation]
    free_vars: List[BitVar]
    domains: Dict[BitVar, Domain]
    bounds: List[CarryBound] = field(default_factory=list)

    @property
    def instance(self) -> BiPrimeInstance:
        return BiPrimeInstance(self.N)

    def system(self) -> BitEquationSystem:
        return build_system(self.instance, self.split)

    def free_factor_bits(self) -> List[BitVar]:
        return [v for v in self.free_vars if v.side is not Side.CARRY]

    def free_carries(self) -> List[BitVar]:
        return [v for v in self.free_vars if v.side is Side.CARRY]

    def carry_values(self) -> List[Optional[int]]:
        """C_0 .. C_{b_p+b_q-1}; None for carries that are not fixed."""
        last = sum(self.split) - 1
        return [self.fixed.get(BitVar(Side.CARRY, c)) for c in range(last + 1)]

    def assignment_space(self, variables: Sequence[BitVar] = None) -> int:
        variables = self.free_vars if variables is None else variables
        size = 1
        for v in variables:
            lo, hi = self.domains[v]
            size *= hi - lo + 1
        return size

    def iter_free_assignments(self, variables: Sequence[BitVar] = None) -> Iterator[Dict[BitVar, int]]:
        variables = self.free_vars if variables is None else list(variables)
        ranges = [range(self.domains[v][0], self.domains[v][1] + 1) for v in variables]
        for values in itertools.product(*ranges):
            yield dict(zip(variables, values))

    def satisfies(self, free_assignment: Dict[BitVar, int]) -> bool:
        return all(evaluate(r.poly, free_assignment) == 0 for r in self.residual_equations)

    def lift(self, free_assignment: Dict[BitVar, int]) -> Dict[BitVar, int]:
        """Full assignment from values of the free variables."""
        values = dict(self.fixed)
        values.update(free_assignment)
        for var, expr in self.substitutions.items():
            values[var] = evaluate(expr, values)
        return values

    def lift_factors(self, free_bits: Dict[BitVar, int]) -> Tuple[int, int]:
        """(P, Q) from values of the free factor bits; carries are not needed."""
        values = dict(self.fixed)
        values.update(free_bits)
        for var, expr in self.substitutions.items():
            if var.side is not Side.CARRY:
                values[var] = evaluate(expr, values)
        return self.factors(values)

    def factors(self, assignment: Dict[BitVar, int]) -> Tuple[int, int]:
        b_p, b_q = self.split
        P = sum(assignment[BitVar(Side.P, k)] << k for k in range(b_p))
        Q = sum(assignment[BitVar(Side.Q, l)] << l for l in range(b_q))
        return P, Q

    def check_binarity(self):
        """Raise NonBinaryResidual if a substitution leaves its domain on a satisfying assignment."""
        uppers = {b.column: b.upper for b in self.bounds}
        targets = {
            v: (0, uppers.get(v.index, v.index)) if v.side is Side.CARRY else (0, 1)
            for v in self.substitutions
        }
        if self.assignment_space() <= PRUNE_SPACE_CAP:
            for free in self.iter_free_assignments():
                if not self.satisfies(free):
                    continue
                for var, expr in self.substitutions.items():
                    lo, hi = targets[var]
                    if not lo <= evaluate(expr, {**self.fixed, **free}) <= hi:
                        raise NonBinaryResidual(f"{var} = {render(expr)} leaves [{lo}, {hi}]")
            return
        for var, expr in self.substitutions.items():
            lo, hi = targets[var]
            e_lo, e_hi = value_range(expr, self.domains)
            if e_lo < lo or e_hi > hi:
                raise NonBinaryResidual(f"{var} = {render(expr)} may leave [{lo}, {hi}]")

    # ==================== Serialization ====================

    def to_dict(self) -> dict:
        return {
            'N': self.N,
            'split': list(self.split),
            'encoding': self.encoding,
            'fixed': {v.name: self.fixed[v] for v in sorted(self.fixed)},
            'substitutions': {v.name: to_terms(self.substitutions[v])
                              for v in sorted(self.substitutions)},
            'substitution_text': {v.name: render(self.substitutions[v])
                                  for v in sorted(self.substitutions)},
            'residual_equations': [r.to_dict() for r in self.residual_equations],
            'free_vars': [v.name for v in self.free_vars],
            'domains': {v.name: list(self.domains[v]) for v in sorted(self.domains)},
            'carry_bounds': [[b.lower, b.upper] for b in self.bounds],
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'ReducedSystem':
        parse = BitVar.parse
        return cls(
            N=int(d['N']),
            split=tuple(d['split']),
            encoding=d['encoding'],
            fixed={parse(k): int(v) for k, v in d['fixed'].items()},
            substitutions={parse(k): from_terms(t)
                           for k, t in d['substitutions'].items()},
            residual_equations=[
                ResidualEquation(r['column'], from_terms(r['terms']))
                for r in d['residual_equations']
            ],
            free_vars=[parse(v) for v in d['free_vars']],
            domains={parse(k): tuple(v) for k, v in d['domains'].items()},
            bounds=[CarryBound(c, lo, hi) for c, (lo, hi) in enumerate(d.get('carry_bounds', []))],
        )


class _Propagator:
    """Mutable working state of one propagation run."""

    def __init__(self, system: BitEquationSystem, bounds: List[CarryBound], encoding: str):
        if encoding not in ENCODINGS:
            raise ValueError(f"unknown encoding {encoding!r}")
        self.system = system
        self.encoding = encoding
        self.domains: Dict[BitVar, Domain] = {}
        for v in system.p_bits() + system.q_bits():
            self.domains[v] = (0, 1)
        for b in bounds:
            self.domains[BitVar(Side.CARRY, b.column)] = (b.lower, b.upper)
        self.fixed: Dict[BitVar, int] = {}
        self.subs: Dict[BitVar, sp.Expr] = {}
        self.equations: Dict[int, sp.Expr] = {
            eq.c: eq.polynomial() for eq in system.equations
        }
        self.changed = False

        for var, value in system.initial_fixed().items():
            lo, hi = self.domains[var]
            if not lo <= value <= hi:
                raise Inconsistent(f"{var} = {value} violates its carry bound [{lo}, {hi}]",
                                   var.index)
            self._fix(var, value)
        for var, (lo, hi) in sorted(self.domains.items()):
            if var not in self.fixed and lo == hi:
                self._fix(var, lo)
        self._clean()

    # ==================== Mutators ====================

    def _replace_everywhere(self, var: BitVar, replacement):
        for c, poly in list(self.equations.items()):
            self.equations[c] = substitute(poly, {var: replacement})
        for target, expr in list(self.subs.items()):
            self.subs[target] = substitute(expr, {var: replacement})
        self._settle_constant_subs()

    def _fix(self, var: BitVar, value: int):
        self.fixed[var] = value
        self.domains[var] = (value, value)
        self.changed = True
        self._replace_everywhere(var, value)

    def _tighten(self, var: BitVar, lo: int, hi: int, column: int):
        old_lo, old_hi = self.domains[var]
        lo, hi = max(lo, old_lo), min(hi, old_hi)
        if lo > hi:
            raise Inconsistent(f"{var} has no admissible value", column)
        if (lo, hi) == (old_lo, old_hi):
            return
        if lo == hi:
            self._fix(var, lo)
        else:
            self.domains[var] = (lo, hi)
            self.changed = True

    def _composes(self, var: BitVar, expr: sp.Expr) -> bool:
        for other in self.subs.values():
            if var in variables_of(other):
                composed = substitute(other, {var: expr})
                if any(abs(c) > 1 for m, c in bit_terms(composed) if m):
                    return False
        return True

    def _substitute(self, var: BitVar, expr: sp.Expr):
        self.subs[var] = expr
        self.domains.pop(var, None)
        self.changed = True
        self._replace_everywhere(var, expr)

    def _settle_constant_subs(self):
        """Substituted variables whose expression collapsed to a constant become fixed."""
        for target, other in list(self.subs.items()):
            if other.is_number:
                del self.subs[target]
                self.fixed[target] = int(other)

    def _clean(self):
        """Drop satisfied equations, normalize, deduplicate, detect contradictions."""
        seen = set()
        for c in sorted(self.equations):
            poly = self.equations[c]
            if poly == 0:
                del self.equations[c]
                continue
            if poly.is_number:
                raise Inconsistent(f"column {c} reduces to {poly} = 0", c)
            if constant_term(poly) % content(poly):
                raise Inconsistent(f"column {c}: {render(poly)} = 0 has no integer solution", c)
            lo, hi = value_range(poly, self.domains)
            if lo > 0 or hi < 0:
                raise Inconsistent(f"column {c}: {render(poly)} = 0 is out of range", c)
            poly = normalized(poly)
            if poly in seen:
                del self.equations[c]
                continue
            seen.add(poly)
            self.equations[c] = poly

    # ==================== Rules ====================

    def _is_binary(self, var: BitVar) -> bool:
        return self.domains[var] == (0, 1)

    def _rule_local(self, c: int):
        """Rule (b): pin variables by exact local enumeration or interval bounds."""
        poly = self.equations.get(c)
        if poly is None:
            return
        variables = sorted(variables_of(poly))
        space = 1
        for v in variables:
            lo, hi = self.domains[v]
            space *= hi - lo + 1
        if space <= LOCAL_ENUMERATION_CAP:
            ranges = [range(self.domains[v][0], self.domains[v][1] + 1) for v in variables]
            seen_values: List[set] = [set() for _ in variables]
            for values in itertools.product(*ranges):
                if evaluate(poly, dict(zip(variables, values))) == 0:
                    for slot, value in zip(seen_values, values):
                        slot.add(value)
            if not seen_values[0]:
                raise Inconsistent(f"column {c}: {render(poly)} = 0 has no local solution", c)
            for v, slot in zip(variables, seen_values):
                self._tighten(v, min(slot), max(slot), c)
            return
        for v in variables:
            lo, hi = self.domains[v]
            while lo <= hi and not self._feasible(poly, v, lo):
                lo += 1
            while hi >= lo and not self._feasible(poly, v, hi):
                hi -= 1
            self._tighten(v, lo, hi, c)
            if v in self.fixed:
                return

    def _feasible(self, poly: sp.Expr, var: BitVar, value: int) -> bool:
        lo, hi = value_range(substitute(poly, {var: value}), self.domains)
        return lo <= 0 <= hi

    def _rule_parity(self, c: int):
        """Rule (c): the equation mod 2."""
        poly = self.equations.get(c)
        if poly is None:
            return
        odd = [m for m, coeff in bit_terms(poly) if m and coeff % 2]
        r = constant_term(poly) % 2
        if len(odd) == 1:
            monomial = odd[0]
            if len(monomial) == 1:
                (var,) = monomial
                lo, hi = self.domains[var]
                if lo % 2 != r:
                    lo += 1
                if hi % 2 != r:
                    hi -= 1
                self._tighten(var, lo, hi, c)
            elif r == 1 and all(self._is_binary(v) for v in monomial):
                for var in monomial:
                    if var not in self.fixed:
                        self._tighten(var, 1, 1, c)
            return
        if len(odd) == 2 and all(len(m) == 1 for m in odd):
            (x,), (y,) = odd
            if not (self._is_binary(x) and self._is_binary(y)):
                return
            for target, other in sorted(((x, y), (y, x)), key=lambda t: _preference(t[0])):
                # x + y even -> target = other; odd -> target = 1 - other
                expr = other.symbol if r == 0 else 1 - other.symbol
                if self._may_substitute(target, expr):
                    self._substitute(target, expr)
                    return

    def _rule_linear(self, c: int):
        """Rule (d): eliminate a variable that occurs linearly with coefficient +-1."""
        poly = self.equations.get(c)
        if poly is None:
            return
        candidates = [
            v for v in variables_of(poly)
            if occurs_only_linearly(poly, v) and abs(linear_coefficient(poly, v)) == 1
        ]
        for var in sorted(candidates, key=_preference):
            coeff = linear_coefficient(poly, var)
            expr = sp.expand((poly - coeff * var.symbol) * -coeff)
            if not is_affine(expr):
                continue
            if any(abs(k) != 1 for m, k in bit_terms(expr) if m):
                continue
            lo, hi = value_range(expr, self.domains)
            v_lo, v_hi = self.domains[var]
            if lo < v_lo or hi > v_hi:
                continue
            if self._may_substitute(var, expr):
                self._substitute(var, expr)
                return

    def _may_substitute(self, var: BitVar, expr: sp.Expr) -> bool:
        if var.side is not Side.CARRY:
            if self.encoding == 'paper-compat':
                return False
            if any(v.side is Side.CARRY for v in variables_of(expr)):
                return False
        return self._composes(var, expr)

    # ==================== Driver ====================

    def run(self, verbose: bool = False) -> int:
        last = len(self.system.equations) - 1
        sweeps = 0
        while True:
            self.changed = False
            sweeps += 1
            order = [0, last] + [c for c in range(1, last)]
            for c in order[:2]:
                self._rule_local(c)
                self._clean()
            for c in order:
                for rule in (self._rule_local, self._rule_parity, self._rule_linear):
                    rule(c)
                    self._clean()
            if not self.changed:
                break
        if verbose:
            print(f"[Reducer] Fixed point after {sweeps} sweeps: "
                  f"{len(self.fixed)} fixed, {len(self.subs)} substituted, "
                  f"{len(self.equations)} equations")
        return sweeps


def _preference(var: BitVar) -> tuple:
    """Elimination order: carries (highest first), then Q bits, then P bits."""
    rank = {Side.CARRY: 0, Side.Q: 1, Side.P: 2}[var.side]
    return rank, -var.index


def _prune_implied(residuals: List[ResidualEquation], free_vars: List[BitVar],
                   domains: Dict[BitVar, Domain]) -> List[ResidualEquation]:
    """Remove residuals implied by the others, checking from last to first."""
    space = 1
    for v in free_vars:
        space *= domains[v][1] - domains[v][0] + 1
    if len(residuals) < 2 or space > PRUNE_SPACE_CAP:
        return residuals
    ranges = [range(domains[v][0], domains[v][1] + 1) for v in free_vars]
    assignments = [dict(zip(free_vars, values)) for values in itertools.product(*ranges)]
    masks = np.array([[evaluate(r.poly, a) == 0 for a in assignments] for r in residuals])
    keep = list(range(len(residuals)))
    for i in reversed(range(len(residuals))):
        others = [j for j in keep if j != i]
        if not others:
            continue
        if np.array_equal(masks[others].all(axis=0), masks[keep].all(axis=0)):
            keep = others
    return [residuals[j] for j in keep]


def propagate(system: BitEquationSystem, bounds: List[CarryBound],
              encoding: str = 'substitution', verbose: bool = False) -> ReducedSystem:
    """
    Reduce the column equations of one split to a fixed point.

    Raises:
        Inconsistent: when some column cannot be satisfied at this split
    """
    state = _Propagator(system, bounds, encoding)
    state.run(verbose=verbose)

    all_vars = system.p_bits() + system.q_bits() + system.carries()
    free_vars = [v for v in sorted(all_vars) if v not in state.fixed and v not in state.subs]
    domains = {v: state.domains[v] for v in free_vars}
    residuals = [ResidualEquation(c, state.equations[c]) for c in sorted(state.equations)]
    residuals = _prune_implied(residuals, free_vars, domains)

    reduced = ReducedSystem(
        N=system.instance.N,
        split=system.split,
        encoding=encoding,
        fixed={v: state.fixed[v] for v in sorted(state.fixed)},
        substitutions={v: state.subs[v] for v in sorted(state.subs)},
        residual_equations=residuals,
        free_vars=free_vars,
        domains=domains,
        bounds=list(bounds),
    )
    if verbose:
        print(f"[Reducer] N={reduced.N} split={reduced.split}: "
              f"{len(free_vars)} free, {len(residuals)} residual equations")
    return reduced


def reduce_split(instance: BiPrimeInstance, split: Split, encoding: str = 'substitution',
                 verbose: bool = False) -> ReducedSystem:
    system = build_system(instance, split)
    return propagate(system, carry_bounds(system), encoding=encoding, verbose=verbose)


def _variable_order(system: BitEquationSystem) -> List[BitVar]:
    return sorted(system.p_bits() + system.q_bits() + system.carries())


def _original_solutions(system: BitEquationSystem, bounds: List[CarryBound],
                        cap: int) -> List[tuple]:
    open_bits = system.open_factor_bits()
    if len(open_bits) > cap:
        raise TooLarge(f"{len(open_bits)} open factor bits exceed the cap of {cap}")
    base = system.initial_fixed()
    order = _variable_order(system)
    solutions = []
    for values in itertools.product((0, 1), repeat=len(open_bits)):
        bits = {**base, **dict(zip(open_bits, values))}
        P = sum(bits[v] << v.index for v in system.p_bits())
        Q = sum(bits[v] << v.index for v in system.q_bits())
        carries = implied_carries(system, P, Q)
        if carries is None:
            continue
        if any(c > b.upper for c, b in zip(carries, bounds)):
            continue
        assignment = full_assignment(system, P, Q)
        solutions.append(tuple(assignment[v] for v in order))
    return solutions


def _reduced_solutions(system: BitEquationSystem, reduced: ReducedSystem,
                       cap: int) -> List[tuple]:
    """
    Lifted solutions of the reduced system, enumerating free factor bits only.

    Free carries take the values the columns imply for the lifted factors;
    factor assignments with no such carries are checked directly only when
    no carry is left free.
    """
    bits = reduced.free_factor_bits()
    if len(bits) > cap:
        raise TooLarge(f"{len(bits)} free factor bits exceed the cap of {cap}")
    free_carries = reduced.free_carries()
    order = _variable_order(system)
    solutions = []
    for values in itertools.product((0, 1), repeat=len(bits)):
        free = dict(zip(bits, values))
        P, Q = reduced.lift_factors(free)
        expected = full_assignment(system, P, Q)
        if expected is not None:
            free.update({v: expected[v] for v in free_carries})
        elif free_carries:
            continue
        if any(not lo <= free[v] <= hi for v, (lo, hi) in reduced.domains.items()):
            continue
        if not reduced.satisfies(free):
            continue
        lifted = reduced.lift(free)
        solutions.append(tuple(lifted.get(v) for v in order))
    return solutions


def verify_reduction(system: BitEquationSystem, reduced: ReducedSystem,
                     cap: int = VERIFY_BIT_CAP) -> bool:
    """
    Exhaustive oracle: do the original and reduced solution sets correspond one to one?

    Both sides enumerate factor bits only; carries follow column by column.

    Raises:
        TooLarge: if either side has more than `cap` factor bits to enumerate
    """
    bounds = reduced.bounds or carry_bounds(system)
    original = _original_solutions(system, bounds, cap)
    lifted = _reduced_solutions(system, reduced, cap)
    return len(lifted) == len(set(lifted)) and set(lifted) == set(original)
