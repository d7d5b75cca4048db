"""
Shot-based readout, single-qubit tomography and factor extraction.

Seeds: `SeedSequence(seed).spawn(3 n + 1)`; child 3q + b serves qubit q in
basis b of (Z, X, Y) and the last child the joint computational readout.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .adia import PAULI_X, PAULI_Y, PAULI_Z, IDENTITY, StateVector
from .bitplan import BiPrimeInstance, Split
from .errors import BasisMissing, DimensionMismatch, NotAFactorization
from .hamcomp import QubitMap, build_qubit_map, decode_basis_state
from .reducer import ReducedSystem

BASES = ('Z', 'X', 'Y')
DEFAULT_SHOTS = 8192
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -0.05
TIE_TOL = 1e-9

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
ROTATIONS = {'Z': IDENTITY, 'X': _H, 'Y': _H @ _SDG}

Seed = Union[int, np.random.SeedSequence, None]


@dataclass
class MeasurementCounts:
    basis: str
    shots: int
    counts: Dict[str, int]
    seed: Optional[int] = None
    qubit: Optional[int] = None

    def expectation(self) -> float:
        """(n0 - n1) / shots for a single-qubit record."""
        return (self.counts.get('0', 0) - self.counts.get('1', 0)) / self.shots

    def frequencies(self) -> Dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}

    def to_dict(self) -> dict:
        d = {'basis': self.basis, 'shots': self.shots, 'seed': self.seed,
             'counts': dict(sorted(self.counts.items()))}
        if self.qubit is not None:
            d['qubit'] = self.qubit
        return d


def as_seed_sequence(seed: Seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def seed_children(seed: Seed, n_qubits: int) -> List[np.random.SeedSequence]:
    return as_seed_sequence(seed).spawn(3 * n_qubits + 1)


def _seed_label(seed: Seed) -> Optional[int]:
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.entropy) if seed.entropy is not None else None
    return seed


def _multinomial(probabilities: np.ndarray, shots: int, seed: Seed) -> np.ndarray:
    p = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    p = p / p.sum()
    return np.random.default_rng(seed).multinomial(shots, p)


def basis_probabilities(rho: np.ndarray, basis: str) -> np.ndarray:
    R = ROTATIONS[basis]
    return np.real(np.diag(R @ rho @ R.conj().T))


def sample(state: StateVector, basis: str, shots: int = DEFAULT_SHOTS,
           seed: Seed = None, qubit: int = 0) -> MeasurementCounts:
    """Pre-rotate one qubit (Z: none, X: H, Y: S-dagger then H) and draw `shots` outcomes."""
    basis = basis.upper()
    if basis not in BASES:
        raise ValueError(f"unknown basis {basis!r}")
    if shots < 1:
        raise ValueError("shots must be at least 1")
    p = basis_probabilities(state.reduced_density_matrix(qubit), basis)
    n0, n1 = _multinomial(p, shots, seed)
    return MeasurementCounts(basis, shots, {'0': int(n0), '1': int(n1)}, _seed_label(seed), qubit)


def sample_joint(state: StateVector, shots: int = DEFAULT_SHOTS, seed: Seed = None) -> MeasurementCounts:
    """Computational-basis readout of all qubits; keys are MSB-first bitstrings."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    draws = _multinomial(state.probabilities(), shots, seed)
    width = max(state.n_qubits, 1)
    counts = {format(i, f'0{width}b'): int(c) for i, c in enumerate(draws) if c}
    return MeasurementCounts('Z', shots, counts, _seed_label(seed))


# ==================== Reconstruction ====================

@dataclass(frozen=True, eq=False)
class DensityMatrix1Q:
    matrix: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.matrix, dtype=complex)
        if rho.shape != (2, 2):
            raise DimensionMismatch(f"expected 2x2, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {np.trace(rho):.6g}")
        object.__setattr__(self, 'matrix', rho)

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> 'DensityMatrix1Q':
        return cls(0.5 * (IDENTITY + x * PAULI_X + y * PAULI_Y + z * PAULI_Z))

    def bloch(self) -> np.ndarray:
        rho = self.matrix
        return np.array([2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    @property
    def within_floor(self) -> bool:
        return float(self.eigenvalues()[0]) >= EIGENVALUE_FLOOR

    def clamped(self) -> 'DensityMatrix1Q':
        """Nearest physical state: the Bloch vector pulled back onto the unit ball."""
        r = self.bloch()
        length = float(np.linalg.norm(r))
        if length <= 1.0:
            return self
        return DensityMatrix1Q.from_bloch(*(r / length))

    def trace_distance(self, other: Union['DensityMatrix1Q', np.ndarray]) -> float:
        sigma = other.matrix if isinstance(other, DensityMatrix1Q) else np.asarray(other)
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(self.matrix - sigma))))

    def distance_to_physical(self) -> float:
        return self.trace_distance(self.clamped())

    def to_dict(self) -> dict:
        return {
            'real': self.matrix.real.tolist(),
            'imag': self.matrix.imag.tolist(),
            'bloch': self.bloch().tolist(),
            'distance_to_physical': self.distance_to_physical(),
        }


def reconstruct_from_expectations(z: float, x: float, y: float) -> DensityMatrix1Q:
    return DensityMatrix1Q.from_bloch(x, y, z)


def reconstruct(z: MeasurementCounts, x: MeasurementCounts, y: MeasurementCounts) -> DensityMatrix1Q:
    """
    Linear inversion rho = (I + <X> X + <Y> Y + <Z> Z) / 2.

    Raises:
        BasisMissing: a record is absent or in the wrong basis
    """
    for expected, counts in zip(BASES, (z, x, y)):
        if counts is None or counts.basis != expected:
            raise BasisMissing(f"no {expected}-basis counts")
    if len({z.qubit, x.qubit, y.qubit}) != 1:
        raise ValueError(f"counts from different qubits: {z.qubit}, {x.qubit}, {y.qubit}")
    return reconstruct_from_expectations(z.expectation(), x.expectation(), y.expectation())


@dataclass
class QubitTomography:
    qubit: int
    counts: List[MeasurementCounts]
    estimate: DensityMatrix1Q
    exact: DensityMatrix1Q

    @property
    def error(self) -> float:
        return self.estimate.trace_distance(self.exact)

    def to_dict(self) -> dict:
        return {
            'qubit': self.qubit,
            'counts': [c.to_dict() for c in self.counts],
            'estimate': self.estimate.to_dict(),
            'exact': self.exact.to_dict(),
            'trace_distance_to_exact': self.error,
        }


def tomography(state: StateVector, qubit: int, shots: int,
               seeds: Sequence[np.random.SeedSequence]) -> QubitTomography:
    counts = [sample(state, b, shots, s, qubit) for b, s in zip(BASES, seeds)]
    return QubitTomography(qubit, counts, reconstruct(*counts),
                           DensityMatrix1Q(state.reduced_density_matrix(qubit)))


def product_tomography(state: StateVector, shots: int = DEFAULT_SHOTS,
                       seed: Seed = None) -> List[QubitTomography]:
    children = seed_children(seed, state.n_qubits)
    return [tomography(state, q, shots, children[3 * q:3 * q + 3]) for q in range(state.n_qubits)]


def trajectory_tomography(trajectory: Sequence[StateVector], shots: int = DEFAULT_SHOTS,
                          seed: Seed = None, qubit: int = 0) -> List[QubitTomography]:
    """Reconstruction after every step (trajectory[1:])."""
    steps = list(trajectory[1:])
    children = as_seed_sequence(seed).spawn(3 * len(steps))
    return [tomography(s, qubit, shots, children[3 * m:3 * m + 3]) for m, s in enumerate(steps)]


# ==================== Factor extraction ====================

def _candidates(source) -> Tuple[List[int], Dict[int, float]]:
    if isinstance(source, MeasurementCounts):
        probs = {int(k, 2): v / source.shots for k, v in source.counts.items()}
    else:
        amps = source.probabilities() if isinstance(source, StateVector) else np.asarray(source)
        probs = {i: float(p) for i, p in enumerate(amps)}
    top = max(probs.values())
    return sorted(i for i, p in probs.items() if p >= top - TIE_TOL), probs


def extract_factors(source: Union[StateVector, MeasurementCounts, np.ndarray],
                    reduced: ReducedSystem, instance: BiPrimeInstance = None,
                    split: Split = None, qubit_map: QubitMap = None) -> Tuple[int, int]:
    """
    Factors from the maximal-probability outcomes; (P, Q) with P <= Q.

    Raises:
        NotAFactorization: no maximal outcome lifts to P * Q = N
    """
    if instance is not None and instance.N != reduced.N:
        raise ValueError(f"instance {instance.N} does not match reduction of {reduced.N}")
    if split is not None and tuple(split) != tuple(reduced.split):
        raise ValueError(f"split {split} does not match reduction split {reduced.split}")
    qubit_map = qubit_map or build_qubit_map(reduced)
    N = reduced.N
    outcomes, probs = _candidates(source)
    found = []
    for index in outcomes:
        for P, Q in decode_basis_state(index, reduced, qubit_map):
            P, Q = min(P, Q), max(P, Q)
            if P * Q == N and 1 < P <= Q < N:
                found.append((P, Q))
    if not found:
        shown = ', '.join(f"|{i}> ({probs[i]:.3f})" for i in outcomes)
        raise NotAFactorization(f"no maximal outcome factors {N}: {shown}")
    return min(found)
