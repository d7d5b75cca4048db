"""
Adiabatic evolution by piecewise-constant unitaries.

H(s) = (1 - s) H_i + s H_f, step m uses H_m = H(m / M) for a time dt = T / M.
Units: hbar = 1, J in rad/s, times in seconds. Basis index bit i is qubit i.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import DegenerateGap, DimensionMismatch, NormViolation

MODES = ('paper-compat', 'transverse')
DEGENERACY_TOL = 1e-8
UNITARITY_TOL = 1e-10
NORM_TOL = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class Schedule:
    T: float
    M: int
    J: float
    mode: str = 'transverse'

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if not self.J > 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def dt(self) -> float:
        return self.T / self.M

    def s(self, m: int) -> float:
        return m / self.M

    def to_dict(self) -> dict:
        return {'T': self.T, 'M': self.M, 'J': self.J, 'mode': self.mode, 'dt': self.dt}


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitudes on n qubits."""
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 ** self.n_qubits,):
            raise DimensionMismatch(f"{amps.shape} amplitudes for {self.n_qubits} qubits")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-12:
            raise NormViolation(f"state norm^2 is {norm}")
        object.__setattr__(self, 'amplitudes', amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> 'StateVector':
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def uniform(cls, n_qubits: int) -> 'StateVector':
        """|+>^n, the ground state of -sum X."""
        dim = 2 ** n_qubits
        return cls(n_qubits, np.full(dim, 1 / np.sqrt(dim), dtype=complex))

    @classmethod
    def minus(cls, n_qubits: int) -> 'StateVector':
        """|->^n."""
        single = np.array([1, -1], dtype=complex) / np.sqrt(2)
        amps = np.ones(1, dtype=complex)
        for _ in range(n_qubits):
            amps = np.kron(single, amps)
        return cls(n_qubits, amps)

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex], normalize: bool = False) -> 'StateVector':
        amps = np.asarray(amplitudes, dtype=complex)
        if normalize:
            amps = amps / np.linalg.norm(amps)
        n = int(round(np.log2(len(amps))))
        return cls(n, amps)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def apply(self, unitary: np.ndarray) -> 'StateVector':
        amps = unitary @ self.amplitudes
        drift = abs(float(np.linalg.norm(amps)) - 1.0)
        if drift > NORM_TOL:
            raise NormViolation(f"norm drift {drift:.2e}")
        return StateVector(self.n_qubits, amps / np.linalg.norm(amps))

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def reduced_density_matrix(self, qubit: int) -> np.ndarray:
        """2x2 state of one qubit, the others traced out."""
        if not 0 <= qubit < self.n_qubits:
            raise DimensionMismatch(f"qubit {qubit} outside {self.n_qubits} qubits")
        # C order: axis 0 is the most significant qubit
        psi = self.amplitudes.reshape([2] * self.n_qubits)
        axis = self.n_qubits - 1 - qubit
        psi = np.moveaxis(psi, axis, 0).reshape(2, -1)
        return psi @ psi.conj().T

    def overlap(self, other: 'StateVector') -> complex:
        return complex(np.vdot(other.amplitudes, self.amplitudes))


def _embed(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Single-qubit operator acting on `qubit` of n."""
    full = np.ones((1, 1), dtype=complex)
    for q in reversed(range(n_qubits)):
        full = np.kron(full, op if q == qubit else IDENTITY)
    return full


def initial_hamiltonian(n_qubits: int, mode: str, J: float) -> np.ndarray:
    """
    paper-compat: J sum_j Z_j (ground state |1...1>).
    transverse:   -J sum_j X_j (ground state |+...+>).
    """
    if n_qubits < 1:
        raise ValueError("initial Hamiltonian needs at least one qubit")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    dim = 2 ** n_qubits
    H = np.zeros((dim, dim), dtype=complex)
    for q in range(n_qubits):
        if mode == 'paper-compat':
            H += J * _embed(PAULI_Z, q, n_qubits)
        else:
            H -= J * _embed(PAULI_X, q, n_qubits)
    return H


def initial_state(n_qubits: int, mode: str, preparation: str = 'x-gate') -> StateVector:
    """Ground state of the initial Hamiltonian, or |-> when asked for."""
    if preparation == 'minus':
        return StateVector.minus(n_qubits)
    if mode == 'paper-compat':
        return StateVector.basis(n_qubits, 2 ** n_qubits - 1)
    return StateVector.uniform(n_qubits)


def interpolate(H_i: np.ndarray, H_f: np.ndarray, s: float) -> np.ndarray:
    if H_i.shape != H_f.shape:
        raise DimensionMismatch(f"H_i {H_i.shape} vs H_f {H_f.shape}")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    return (1.0 - s) * H_i + s * H_f


def expm_hermitian(H: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) by Hermitian eigendecomposition."""
    if not np.count_nonzero(H - np.diag(np.diag(H))):
        return np.diag(np.exp(-1j * np.diag(H).real * t))
    w, V = scipy.linalg.eigh(H)
    return (V * np.exp(-1j * w * t)) @ V.conj().T


def step_hamiltonians(H_i: np.ndarray, H_f: np.ndarray, schedule: Schedule) -> List[np.ndarray]:
    return [interpolate(H_i, H_f, schedule.s(m)) for m in range(1, schedule.M + 1)]


def step_unitaries(H_i: np.ndarray, H_f: np.ndarray, schedule: Schedule) -> List[np.ndarray]:
    """U_m = exp(-i H_m dt), m = 1..M."""
    unitaries = []
    for H_m in step_hamiltonians(H_i, H_f, schedule):
        U = expm_hermitian(H_m, schedule.dt)
        deviation = np.max(np.abs(U.conj().T @ U - np.eye(len(U))))
        if deviation > UNITARITY_TOL:
            raise NormViolation(f"step unitary deviates from unitarity by {deviation:.2e}")
        unitaries.append(U)
    return unitaries


@dataclass(frozen=True)
class PhaseRow:
    m: int
    s: float
    moduli: tuple
    turns: tuple


def phase_table(H_i: np.ndarray, H_f: np.ndarray, schedule: Schedule) -> List[PhaseRow]:
    """
    Per-step diagonal phases in turns, unwrapped: -E_j dt / 2 pi.

    Only defined when every step Hamiltonian is diagonal.
    """
    rows = []
    for m, H_m in enumerate(step_hamiltonians(H_i, H_f, schedule), start=1):
        if not np.allclose(H_m, np.diag(np.diag(H_m)), atol=1e-12 * max(1.0, np.abs(H_m).max())):
            raise ValueError(f"step {m} Hamiltonian is not diagonal")
        energies = np.diag(H_m).real
        U = np.exp(-1j * energies * schedule.dt)
        rows.append(PhaseRow(
            m=m,
            s=schedule.s(m),
            moduli=tuple(float(r) for r in np.abs(U)),
            turns=tuple(float(t) for t in -energies * schedule.dt / (2 * np.pi)),
        ))
    return rows


def render_phase_table(rows: List[PhaseRow]) -> str:
    width = len(rows[0].turns) if rows else 0
    header = f"{'m':>3} {'s':>8}" + ''.join(f" {'r' + str(j + 1):>6}" for j in range(width)) \
        + ''.join(f" {'theta' + str(j + 1) + ' [turns]':>17}" for j in range(width))
    lines = [header]
    for row in rows:
        lines.append(
            f"{row.m:>3} {row.s:>8.4f}"
            + ''.join(f" {r:>6.3f}" for r in row.moduli)
            + ''.join(f" {t:>17.4f}" for t in row.turns)
        )
    return '\n'.join(lines)


@dataclass
class AdiabaticRun:
    schedule: Schedule
    H_i: np.ndarray
    H_f: np.ndarray
    unitaries: List[np.ndarray]
    trajectory: List[StateVector]
    final_probabilities: np.ndarray
    min_gap: Optional[float] = None

    @property
    def final_state(self) -> StateVector:
        return self.trajectory[-1]

    def ground_population(self, ground_indices: Sequence[int]) -> float:
        return float(np.sum(self.final_probabilities[list(ground_indices)]))


def evolve(initial: StateVector, unitaries: Sequence[np.ndarray], schedule: Schedule,
           H_i: np.ndarray = None, H_f: np.ndarray = None,
           keep_trajectory: bool = True) -> AdiabaticRun:
    """Apply U_1 first and U_M last."""
    state = initial
    trajectory = [state]
    for m, U in enumerate(unitaries, start=1):
        if U.shape != (state.dim, state.dim):
            raise DimensionMismatch(f"step {m} unitary {U.shape} vs state dimension {state.dim}")
        amps = U @ state.amplitudes
        drift = abs(float(np.linalg.norm(amps)) - 1.0)
        if drift > NORM_TOL:
            raise NormViolation(f"norm drift {drift:.2e} after step {m}")
        # absorb rounding below the tolerance before re-validating
        state = StateVector(state.n_qubits, amps / np.linalg.norm(amps))
        if keep_trajectory:
            trajectory.append(state)
    if not keep_trajectory:
        trajectory.append(state)
    return AdiabaticRun(
        schedule=schedule,
        H_i=H_i,
        H_f=H_f,
        unitaries=list(unitaries),
        trajectory=trajectory,
        final_probabilities=state.probabilities(),
    )


# ==================== Spectrum ====================

@dataclass
class GapScan:
    s_values: np.ndarray
    energies: np.ndarray        # shape (len(s_values), dim), ascending per row
    ground_degeneracy: int
    min_gap: float
    min_gap_s: float
    degenerate: bool

    def to_csv(self, J: float = 1.0) -> str:
        dim = self.energies.shape[1]
        lines = ['s,' + ','.join(f"level{k}" for k in range(dim))]
        for s, row in zip(self.s_values, self.energies):
            lines.append(f"{s:.6f}," + ','.join(f"{e / J:.12g}" for e in row))
        return '\n'.join(lines) + '\n'

    def to_dict(self, J: float = 1.0) -> dict:
        return {
            'ground_degeneracy': self.ground_degeneracy,
            'min_gap': self.min_gap,
            'min_gap_over_J': self.min_gap / J,
            'min_gap_s': self.min_gap_s,
            'degenerate': self.degenerate,
            'resolution': len(self.s_values),
        }


def ground_degeneracy(H: np.ndarray, tolerance: float = DEGENERACY_TOL) -> int:
    w = scipy.linalg.eigvalsh(H)
    scale = max(1.0, float(np.max(np.abs(w))))
    return int(np.sum(w - w[0] <= tolerance * scale))


def gap_scan(H_i: np.ndarray, H_f: np.ndarray, resolution: int = 101,
             tolerance: float = DEGENERACY_TOL) -> GapScan:
    """
    Spectrum of H(s) on a uniform grid.

    The tracked gap separates level 0 from level d, d being the ground
    degeneracy of H_f: levels that end in the final ground space are not
    excitations. If H_f is fully degenerate the gap is reported as 0.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if H_i.shape != H_f.shape:
        raise DimensionMismatch(f"H_i {H_i.shape} vs H_f {H_f.shape}")
    s_values = np.linspace(0.0, 1.0, resolution)
    energies = np.array([scipy.linalg.eigvalsh(interpolate(H_i, H_f, s)) for s in s_values])
    dim = energies.shape[1]
    d = ground_degeneracy(H_f, tolerance)
    scale = max(1.0, float(np.max(np.abs(energies))))
    if d >= dim:
        return GapScan(s_values, energies, d, 0.0, 1.0, True)
    gaps = energies[:, d] - energies[:, 0]
    k = int(np.argmin(gaps))
    min_gap = float(gaps[k])
    return GapScan(s_values, energies, d, min_gap, float(s_values[k]),
                   min_gap <= tolerance * scale)


def runtime_bound(H_i: np.ndarray, H_f: np.ndarray, epsilon: float = 0.1,
                  resolution: int = 101, scan: GapScan = None) -> float:
    """
    Heuristic sufficient time T = ||H_f - H_i|| / (epsilon * gap^2).

    Raises:
        DegenerateGap: when the minimum gap vanishes
    """
    norm = float(np.linalg.norm(H_f - H_i, 2))
    if norm <= 1e-15:
        return 0.0
    scan = scan or gap_scan(H_i, H_f, resolution)
    if scan.degenerate or scan.min_gap <= 0:
        raise DegenerateGap(f"minimum gap {scan.min_gap:.3e} vanishes; set T manually")
    return norm / (epsilon * scan.min_gap ** 2)


def auto_schedule(H_i: np.ndarray, H_f: np.ndarray, J: float, epsilon: float,
                  time_factor: float, base_steps: int, max_steps: int,
                  scan: GapScan, jump_ratio: float = 10.0,
                  phase_per_step: float = 0.25) -> Schedule:
    """
    Transverse schedule from the runtime bound.

    M keeps each Hamiltonian jump well below the minimum gap and the phase
    accumulated per step at the minimum gap below `phase_per_step` radians.
    """
    T = time_factor * runtime_bound(H_i, H_f, epsilon, scan=scan)
    norm = float(np.linalg.norm(H_f - H_i, 2))
    M = max(base_steps,
            int(np.ceil(jump_ratio * norm / scan.min_gap)),
            int(np.ceil(scan.min_gap * T / phase_per_step)))
    return Schedule(T=T, M=min(M, max_steps), J=J, mode='transverse')


def save_gap_csv(scan: GapScan, path: str, J: float = 1.0):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(scan.to_csv(J))
    print(f"[Adiabatic] Gap scan saved to {path}")

