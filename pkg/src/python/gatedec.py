"""
Step unitaries as gate programs in the basis {x, h, sdg, u1, rz, rx, cx}.

Programs list gates in application order: gate 0 acts first, so the
matrix of a program is G_last ... G_1 G_0.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, NotDiagonal, NotUnitModulus, UnsupportedStructure
from .hamcomp import ZPolynomial

GATE_KINDS = ('x', 'h', 'sdg', 'u1', 'rz', 'rx', 'cx')
PARAMETRIC = ('u1', 'rz', 'rx')
SIMULATION_QUBIT_CAP = 12

_FIXED_MATRICES = {
    'x': np.array([[0, 1], [1, 0]], dtype=complex),
    'h': np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    'sdg': np.array([[1, 0], [0, -1j]], dtype=complex),
    'cx': np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


def normalize_angle(theta: float) -> float:
    """Reduce to (-pi, pi]."""
    t = math.remainder(theta, 2 * math.pi)
    return math.pi if t <= -math.pi else t


def to_turns(theta: float) -> float:
    return theta / (2 * math.pi)


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: Tuple[int, ...]
    theta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        arity = 2 if self.kind == 'cx' else 1
        if len(targets) != arity:
            raise ValueError(f"{self.kind} takes {arity} qubit(s), got {targets}")
        if self.kind == 'cx' and targets[0] == targets[1]:
            raise ValueError("cx control and target must differ")
        object.__setattr__(self, 'targets', targets)
        if self.kind in PARAMETRIC:
            if self.theta is None or not math.isfinite(self.theta):
                raise ValueError(f"{self.kind} needs a finite angle, got {self.theta}")
            object.__setattr__(self, 'theta', normalize_angle(float(self.theta)))
        elif self.theta is not None:
            raise ValueError(f"{self.kind} takes no angle")

    def matrix(self) -> np.ndarray:
        if self.kind in _FIXED_MATRICES:
            return _FIXED_MATRICES[self.kind]
        t = self.theta
        if self.kind == 'u1':
            return np.array([[1, 0], [0, np.exp(1j * t)]], dtype=complex)
        if self.kind == 'rz':
            return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex)
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def x(q: int) -> Gate:
    return Gate('x', (q,))


def h(q: int) -> Gate:
    return Gate('h', (q,))


def sdg(q: int) -> Gate:
    return Gate('sdg', (q,))


def u1(theta: float, q: int) -> Gate:
    return Gate('u1', (q,), theta)


def rz(theta: float, q: int) -> Gate:
    return Gate('rz', (q,), theta)


def rx(theta: float, q: int) -> Gate:
    return Gate('rx', (q,), theta)


def cx(control: int, target: int) -> Gate:
    return Gate('cx', (control, target))


@dataclass(frozen=True)
class GateProgram:
    n_qubits: int
    gates: Tuple[Gate, ...] = ()
    metadata: Dict[str, object] = field(default_factory=dict, compare=False)
    measured: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'gates', tuple(self.gates))
        object.__setattr__(self, 'measured', tuple(self.measured))
        for gate in self.gates:
            if any(t >= self.n_qubits for t in gate.targets):
                raise DimensionMismatch(f"{gate.kind}{gate.targets} outside {self.n_qubits} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    def then(self, other: 'GateProgram') -> 'GateProgram':
        """`self` first, then `other`."""
        if other.n_qubits != self.n_qubits:
            raise DimensionMismatch(f"{self.n_qubits} vs {other.n_qubits} qubits")
        return GateProgram(self.n_qubits, self.gates + other.gates,
                           dict(self.metadata), self.measured + other.measured)

    def angles_in_turns(self) -> List[float]:
        return [to_turns(g.theta) for g in self.gates if g.kind in PARAMETRIC]


def concatenate(programs: Sequence[GateProgram], metadata: Dict[str, object] = None) -> GateProgram:
    if not programs:
        raise ValueError("nothing to concatenate")
    out = GateProgram(programs[0].n_qubits, (), metadata or {})
    for program in programs:
        out = out.then(program)
    return replace(out, metadata=metadata or {})


# ==================== Simulation ====================

def _apply_gate(tensor: np.ndarray, gate: Gate, n_qubits: int) -> np.ndarray:
    """Apply to the leading n qubit axes of `tensor` (C order, qubit n-1 first)."""
    if gate.kind == 'cx':
        axes = [n_qubits - 1 - t for t in gate.targets]
        g = gate.matrix().reshape(2, 2, 2, 2)
        out = np.tensordot(g, tensor, axes=([2, 3], axes))
        return np.moveaxis(out, [0, 1], axes)
    axis = n_qubits - 1 - gate.targets[0]
    out = np.tensordot(gate.matrix(), tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def simulate_program(program: GateProgram) -> np.ndarray:
    """Dense unitary of the program (up to the global phase it cannot carry)."""
    n = program.n_qubits
    if n > SIMULATION_QUBIT_CAP:
        raise DimensionMismatch(f"{n} qubits exceed the simulation cap {SIMULATION_QUBIT_CAP}")
    dim = 2 ** n
    tensor = np.eye(dim, dtype=complex).reshape([2] * n + [dim])
    for gate in program.gates:
        tensor = _apply_gate(tensor, gate, n)
    return tensor.reshape(dim, dim)


def distance_up_to_global_phase(U: np.ndarray, V: np.ndarray) -> float:
    """min over phi of ||U - e^{i phi} V|| (spectral norm)."""
    if U.shape != V.shape:
        raise DimensionMismatch(f"{U.shape} vs {V.shape}")
    angles = np.sort(np.angle(np.linalg.eigvals(V.conj().T @ U)))
    if len(angles) == 1:
        phi = angles[0]
    else:
        # smallest arc covering all eigenphases; its midpoint is optimal
        gaps = np.diff(np.append(angles, angles[0] + 2 * np.pi))
        k = int(np.argmax(gaps))
        start = angles[(k + 1) % len(angles)]
        width = 2 * np.pi - gaps[k]
        phi = start + width / 2
    return float(np.linalg.norm(U - np.exp(1j * phi) * V, 2))


# ==================== Decomposition ====================

def peephole(program: GateProgram) -> GateProgram:
    """Merge adjacent u1s, cancel adjacent x pairs, drop zero rotations."""
    gates = list(program.gates)
    changed = True
    while changed:
        changed = False
        out: List[Gate] = []
        for gate in gates:
            if gate.kind in PARAMETRIC and abs(gate.theta) < 1e-15:
                changed = True
                continue
            if out and out[-1].targets == gate.targets:
                prev = out[-1]
                if prev.kind == gate.kind == 'x':
                    out.pop()
                    changed = True
                    continue
                if prev.kind == gate.kind == 'u1':
                    out[-1] = u1(prev.theta + gate.theta, gate.targets[0])
                    changed = True
                    continue
            out.append(gate)
        gates = out
    return replace(program, gates=tuple(gates))


def decompose_diag_1q(U: np.ndarray, peephole_pass: bool = False,
                      metadata: Dict[str, object] = None) -> GateProgram:
    """
    diag(e^{i t1}, e^{i t2}) = U1(t2) X U1(t1) X, emitted as [X, U1(t1), X, U1(t2)].

    Raises:
        NotDiagonal: off-diagonal magnitude above 1e-12
        NotUnitModulus: a diagonal entry is not a pure phase
    """
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2):
        raise DimensionMismatch(f"expected a 2x2 unitary, got {U.shape}")
    if max(abs(U[0, 1]), abs(U[1, 0])) > 1e-12:
        raise NotDiagonal(f"off-diagonal weight {max(abs(U[0, 1]), abs(U[1, 0])):.2e}")
    moduli = np.abs(np.diag(U))
    if np.max(np.abs(moduli - 1.0)) > 1e-10:
        raise NotUnitModulus(f"diagonal moduli {moduli.tolist()}")
    theta1 = float(np.angle(U[0, 0]))
    theta2 = float(np.angle(U[1, 1]))
    program = GateProgram(1, (x(0), u1(theta1, 0), x(0), u1(theta2, 0)), dict(metadata or {}))
    return peephole(program) if peephole_pass else program


@dataclass(frozen=True)
class StepStructure:
    """H = D + sum_j b_j X_j."""
    diagonal: ZPolynomial
    x_coefficients: Tuple[float, ...]
    D: np.ndarray
    B: np.ndarray


def split_step_hamiltonian(H: np.ndarray, tolerance: float = 1e-12) -> StepStructure:
    H = np.asarray(H, dtype=complex)
    dim = H.shape[0]
    n = int(round(math.log2(dim))) if dim else 0
    if H.shape != (dim, dim) or 2 ** n != dim:
        raise UnsupportedStructure(f"shape {H.shape} is not a qubit operator")
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.conj().T)) > tolerance * scale:
        raise UnsupportedStructure("Hamiltonian is not Hermitian")
    D = np.diag(np.diag(H).real).astype(complex)
    off = H - D
    b = []
    B = np.zeros_like(H)
    for j in range(n):
        coeff = off[0, 1 << j]
        if abs(coeff.imag) > tolerance * scale:
            raise UnsupportedStructure(f"X_{j} coefficient {coeff} is not real")
        b.append(float(coeff.real))
        idx = np.arange(dim)
        B[idx, idx ^ (1 << j)] += coeff.real
    if np.max(np.abs(off - B)) > tolerance * scale:
        raise UnsupportedStructure("off-diagonal part is not a sum of single-qubit X terms")
    return StepStructure(ZPolynomial.from_diagonal(np.diag(H).real), tuple(b), D, B)


def _commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def trotter_bound(structure: StepStructure, dt: float, order: int, slices: int) -> float:
    """Operator-norm error of `slices` Trotter slices of the given order."""
    D, B = structure.D, structure.B
    if order == 1:
        return dt ** 2 / (2 * slices) * float(np.linalg.norm(_commutator(B, D), 2))
    inner = float(np.linalg.norm(_commutator(D, _commutator(D, B)), 2))
    outer = float(np.linalg.norm(_commutator(B, _commutator(B, D)), 2))
    return dt ** 3 / slices ** 2 * (inner / 12 + outer / 24)


def _phase_polynomial(zpoly: ZPolynomial, tau: float) -> List[Gate]:
    """exp(-i tau sum c_S Z_S) up to global phase."""
    gates: List[Gate] = []
    for support, coeff in zpoly.items():
        if not support:
            continue
        angle = 2 * float(coeff) * tau
        qubits = sorted(support)
        if len(qubits) == 1:
            gates.append(u1(angle, qubits[0]))
            continue
        ladder = [cx(a, b) for a, b in zip(qubits, qubits[1:])]
        gates.extend(ladder)
        gates.append(rz(angle, qubits[-1]))
        gates.extend(reversed(ladder))
    return gates


def _x_layer(coefficients: Sequence[float], tau: float) -> List[Gate]:
    return [rx(2 * b * tau, j) for j, b in enumerate(coefficients) if b != 0]


def decompose_step(H_m: np.ndarray, dt: float, order: int = 2, slices: Optional[int] = None,
                   tolerance: float = 1e-3, max_slices: int = 1024,
                   peephole_pass: bool = False, metadata: Dict[str, object] = None) -> GateProgram:
    """
    Trotterized exp(-i H_m dt) for H_m = D + sum_j b_j X_j.

    With `slices` unset the slice count doubles until the commutator bound
    drops below `tolerance` (or reaches `max_slices`). The bound is stored
    in `metadata['trotter_bound']`.
    """
    if order not in (1, 2):
        raise ValueError(f"Trotter order must be 1 or 2, got {order}")
    structure = split_step_hamiltonian(H_m)
    n = len(structure.x_coefficients)
    if slices is None:
        slices = 1
        while trotter_bound(structure, dt, order, slices) > tolerance and slices < max_slices:
            slices *= 2
    bound = trotter_bound(structure, dt, order, slices)

    tau = dt / slices
    gates: List[Gate] = []
    for _ in range(slices):
        if order == 1:
            gates += _x_layer(structure.x_coefficients, tau)
            gates += _phase_polynomial(structure.diagonal, tau)
        else:
            gates += _x_layer(structure.x_coefficients, tau / 2)
            gates += _phase_polynomial(structure.diagonal, tau)
            gates += _x_layer(structure.x_coefficients, tau / 2)
    info = dict(metadata or {})
    info.update({'order': order, 'slices': slices, 'trotter_bound': bound, 'dt': dt})
    program = GateProgram(n, tuple(gates), info)
    return peephole(program) if peephole_pass else program


# ==================== Preparation and readout ====================

def preparation_program(n_qubits: int, mode: str, preparation: str = 'x-gate') -> GateProgram:
    """Gates taking |0...0> to the initial state."""
    gates: List[Gate] = []
    for q in range(n_qubits):
        if preparation == 'minus':
            gates += [x(q), h(q)]
        elif mode == 'paper-compat':
            gates.append(x(q))
        else:
            gates.append(h(q))
    return GateProgram(n_qubits, tuple(gates), {'stage': 'preparation'})


def with_readout(program: GateProgram, bases: Mapping[int, str]) -> GateProgram:
    """Append basis pre-rotations (X: h; Y: sdg then h) and mark qubits measured."""
    gates = list(program.gates)
    for q in sorted(bases):
        basis = bases[q].upper()
        if basis == 'X':
            gates.append(h(q))
        elif basis == 'Y':
            gates += [sdg(q), h(q)]
        elif basis != 'Z':
            raise ValueError(f"unknown basis {bases[q]!r}")
    info = dict(program.metadata)
    info['readout'] = {str(q): bases[q].upper() for q in sorted(bases)}
    return GateProgram(program.n_qubits, tuple(gates), info, tuple(sorted(bases)))
