"""
Hybrid factoring pipeline.

Split search and reduction run classically; the residual problem is then
compiled, evolved adiabatically, decomposed into gates and read out.
"""
import json
import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .adia import (
    MODES, AdiabaticRun, GapScan, PhaseRow, Schedule, StateVector, auto_schedule, evolve,
    gap_scan, initial_hamiltonian, initial_state, phase_table, render_phase_table,
    runtime_bound, save_gap_csv, step_hamiltonians, step_unitaries,
)
from .bitplan import (
    BiPrimeInstance, BitEquationSystem, enumerate_splits, implied_carries, render, render_table,
)
from .errors import (
    DegenerateGap, EvolutionFailed, Inconsistent, NoSplitConsistent, NotAFactorization, TooLarge,
)
from .gatedec import (
    GateProgram, concatenate, decompose_diag_1q, decompose_step, preparation_program, with_readout,
)
from .hamcomp import GROUND_TOLERANCE, QubitMap, ZPolynomial, compile, ground_states
from .instances import is_prime
from .qasm import save_qasm
from .reducer import ENCODINGS, VERIFY_BIT_CAP, ReducedSystem, reduce_split, verify_reduction
from .tomo import (
    QubitTomography, as_seed_sequence, extract_factors, sample_joint, seed_children,
    tomography, trajectory_tomography,
)

OUTPUT_KINDS = ('report-json', 'qasm', 'gap-csv', 'table-text', 'angle-table', 'figures')
DEFAULT_J = 2 * math.pi * 1e6


@dataclass
class RunConfig:
    N: int
    mode: str = 'transverse'
    encoding: str = 'substitution'
    T: float = 10e-6
    M: int = 8
    J: float = DEFAULT_J
    shots: int = 8192
    seed: int = 2020
    outputs: Tuple[str, ...] = ()
    out_dir: str = './results'
    preparation: str = 'x-gate'
    auto_schedule: bool = True
    epsilon: float = 0.1
    time_factor: float = 4.0
    max_steps: int = 4096
    max_retries: int = 3
    gap_resolution: int = 101
    trotter_order: int = 2
    trotter_tolerance: float = 1e-3
    max_slices: int = 256
    peephole: bool = False
    max_qasm_steps: int = 64
    per_step_tomography: bool = True
    verify: bool = True
    verbose: bool = False

    def __post_init__(self):
        self.N = int(self.N)
        self.outputs = tuple(self.outputs)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"encoding must be one of {ENCODINGS}, got {self.encoding!r}")
        if self.preparation not in ('x-gate', 'minus'):
            raise ValueError(f"unknown preparation {self.preparation!r}")
        for name in ('T', 'M', 'J', 'shots', 'epsilon', 'time_factor', 'max_steps',
                     'gap_resolution', 'trotter_tolerance', 'max_slices'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.trotter_order not in (1, 2):
            raise ValueError(f"trotter_order must be 1 or 2, got {self.trotter_order}")
        unknown = set(self.outputs) - set(OUTPUT_KINDS)
        if unknown:
            raise ValueError(f"unknown output kinds {sorted(unknown)}; choose from {OUTPUT_KINDS}")

    @classmethod
    def from_config(cls, config: dict, **overrides) -> 'RunConfig':
        """Build from the YAML sections; overrides that are None are ignored."""
        inst = config.get('instance', {}) or {}
        enc = config.get('encoding', {}) or {}
        sched = config.get('schedule', {}) or {}
        dec = config.get('decomposition', {}) or {}
        tomo_cfg = config.get('tomography', {}) or {}
        out = config.get('output', {}) or {}
        log = config.get('logging', {}) or {}
        values = {
            'N': inst.get('N', 35),
            'mode': inst.get('mode', 'transverse'),
            'encoding': enc.get('scheme', 'substitution'),
            'verify': enc.get('verify', True),
            'T': sched.get('T_us', 10.0) * 1e-6,
            'M': sched.get('M', 8),
            'J': sched.get('J', DEFAULT_J),
            'preparation': sched.get('preparation', 'x-gate'),
            'auto_schedule': sched.get('auto', True),
            'epsilon': sched.get('epsilon', 0.1),
            'time_factor': sched.get('time_factor', 4.0),
            'max_steps': sched.get('max_steps', 4096),
            'max_retries': sched.get('max_retries', 3),
            'gap_resolution': sched.get('gap_resolution', 101),
            'trotter_order': dec.get('trotter_order', 2),
            'trotter_tolerance': dec.get('tolerance', 1e-3),
            'max_slices': dec.get('max_slices', 256),
            'peephole': dec.get('peephole', False),
            'shots': tomo_cfg.get('shots', 8192),
            'seed': tomo_cfg.get('seed', 2020),
            'per_step_tomography': tomo_cfg.get('per_step', True),
            'outputs': tuple(out.get('emit', []) or []),
            'out_dir': out.get('out_dir', './results'),
            'max_qasm_steps': out.get('max_qasm_steps', 64),
            'verbose': log.get('verbose', False),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> dict:
        d = asdict(self)
        d['outputs'] = list(self.outputs)
        del d['verbose']
        return d

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> 'RunConfig':
        names = {f.name for f in fields(cls)}
        values = {k: v for k, v in d.items() if k in names}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class StageTiming:
    stage: str
    seconds: float

    def to_dict(self) -> dict:
        return asdict(self)


def save_timings(timings: List[StageTiming], path: str):
    _dump([t.to_dict() for t in timings], Path(path))
    print(f"[Pipeline] Timings saved to {path}")


def _dump(doc: dict, path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(doc, f, indent=2, ensure_ascii=False)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


@dataclass
class ReductionStage:
    """Output of the classical half: the accepted split and every split tried."""
    N: int
    splits_tried: List[dict]
    reduced: ReducedSystem
    verified: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            'N': self.N,
            'splits_tried': self.splits_tried,
            'reduction': self.reduced.to_dict(),
            'verified': self.verified,
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'ReductionStage':
        """Accepts a reduce-stage document or a full factor report."""
        return cls(int(d['N']), list(d['splits_tried']),
                   ReducedSystem.from_dict(d['reduction']), d.get('verified'))

    def save(self, path: str):
        _dump(self.to_dict(), Path(path))
        print(f"[Pipeline] Reduction stage saved to {path}")


@dataclass
class FactorReport:
    N: int
    split: Tuple[int, int]
    factors: Tuple[int, int]
    factors_prime: bool
    splits_tried: List[dict]
    carries: List[Optional[int]]
    reduction: dict
    verified: Optional[bool]
    hamiltonian: dict
    qubit_map: dict
    schedule: Optional[dict]
    runtime_bound: Optional[float]
    gap: Optional[dict]
    final_probabilities: List[float]
    counts: dict
    tomography: List[dict]
    step_tomography: List[dict]
    decomposition: List[dict]
    attempts: List[dict]
    config: dict
    # not serialized
    system: Optional[BitEquationSystem] = field(default=None, repr=False)
    scan: Optional[GapScan] = field(default=None, repr=False)
    phase_rows: List[PhaseRow] = field(default_factory=list, repr=False)
    programs: List[GateProgram] = field(default_factory=list, repr=False)
    full_program: Optional[GateProgram] = field(default=None, repr=False)
    run: Optional[AdiabaticRun] = field(default=None, repr=False)
    timings: List[StageTiming] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            'N': self.N,
            'split': list(self.split),
            'factors': list(self.factors),
            'factors_prime': self.factors_prime,
            'splits_tried': self.splits_tried,
            'carries': self.carries,
            'reduction': self.reduction,
            'verified': self.verified,
            'hamiltonian': self.hamiltonian,
            'qubit_map': self.qubit_map,
            'schedule': self.schedule,
            'runtime_bound': self.runtime_bound,
            'gap': self.gap,
            'final_probabilities': self.final_probabilities,
            'counts': self.counts,
            'tomography': self.tomography,
            'step_tomography': self.step_tomography,
            'decomposition': self.decomposition,
            'attempts': self.attempts,
            'config': self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def save(self, path: str):
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_json() + '\n', encoding='utf-8')
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
        print(f"[Pipeline] Report saved to {path}")


class FactoringPipeline:
    """
    Runs the stages for one RunConfig.

    Stages: split search and reduction, compilation, schedule, evolution,
    decomposition, tomography, readout.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.timings: List[StageTiming] = []

    def log(self, message: str):
        if self.config.verbose:
            print(message)

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings.append(StageTiming(name, time.perf_counter() - start))

    # ==================== Classical half ====================

    def reduce(self) -> ReductionStage:
        """
        First split that is consistent and whose compiled H_p reaches zero.

        Raises:
            InvalidInstance: N is not admissible
            NoSplitConsistent: every split was rejected
        """
        cfg = self.config
        instance = BiPrimeInstance(cfg.N)
        tried: List[dict] = []
        with self.stage('reduce'):
            for split in enumerate_splits(instance):
                try:
                    reduced = reduce_split(instance, split, cfg.encoding, verbose=cfg.verbose)
                except Inconsistent as exc:
                    tried.append({'split': list(split), 'outcome': 'inconsistent', 'column': exc.column})
                    self.log(f"[Pipeline] split {split}: inconsistent at column {exc.column}")
                    continue
                # shared qubits can collapse H_p (35 gives I), so screen on distinct qubits
                H_p, _ = compile(reduced, shared=False)
                lowest = ground_states(H_p).min_eigenvalue
                if lowest > GROUND_TOLERANCE:
                    tried.append({'split': list(split), 'outcome': 'no-factorization',
                                  'min_eigenvalue': lowest})
                    self.log(f"[Pipeline] split {split}: min eigenvalue {lowest:.4g} > 0")
                    continue
                tried.append({'split': list(split), 'outcome': 'accepted'})
                return ReductionStage(instance.N, tried, reduced, self._verify(reduced))
        raise NoSplitConsistent(f"no bit-length split of {instance.N} admits a factorization")

    def _verify(self, reduced: ReducedSystem) -> Optional[bool]:
        if not self.config.verify:
            return None
        with self.stage('verify'):
            try:
                ok = verify_reduction(reduced.system(), reduced, VERIFY_BIT_CAP)
            except TooLarge:
                return None
        if not ok:
            print(f"[Pipeline] WARNING: reduction of {reduced.N} at {reduced.split} failed verification")
        return ok

    # ==================== Quantum half ====================

    def hamiltonians(self, reduced: ReducedSystem) -> Tuple[ZPolynomial, QubitMap, np.ndarray, np.ndarray]:
        """H_p, its qubit map, H_i and H_f = J diag(H_p); H_i and H_f are None without qubits."""
        cfg = self.config
        with self.stage('compile'):
            H_p, qubit_map = compile(reduced, verbose=cfg.verbose)
        if qubit_map.n_qubits == 0:
            return H_p, qubit_map, None, None
        H_f = cfg.J * np.diag(H_p.diagonal()).astype(complex)
        H_i = initial_hamiltonian(qubit_map.n_qubits, cfg.mode, cfg.J)
        return H_p, qubit_map, H_i, H_f

    def schedule(self, H_i: np.ndarray, H_f: np.ndarray, scan: GapScan) -> Tuple[Schedule, Optional[float]]:
        cfg = self.config
        configured = Schedule(cfg.T, cfg.M, cfg.J, cfg.mode)
        try:
            bound = runtime_bound(H_i, H_f, cfg.epsilon, scan=scan)
        except DegenerateGap:
            self.log("[Adiabatic] degenerate gap, keeping the configured schedule")
            return configured, None
        if cfg.mode == 'paper-compat' or not cfg.auto_schedule:
            return configured, bound
        return auto_schedule(H_i, H_f, cfg.J, cfg.epsilon, cfg.time_factor,
                             cfg.M, cfg.max_steps, scan), bound

    def decompose(self, H_i: np.ndarray, H_f: np.ndarray, schedule: Schedule,
                  unitaries: List[np.ndarray] = None) -> Tuple[List[GateProgram], Optional[GateProgram]]:
        """Per-step programs and the full program (preparation, steps, Z readout)."""
        cfg = self.config
        n = H_i.shape[0].bit_length() - 1
        if schedule.M > cfg.max_qasm_steps:
            self.log(f"[Gates] M={schedule.M} exceeds {cfg.max_qasm_steps}, no programs")
            return [], None
        with self.stage('decompose'):
            unitaries = unitaries or step_unitaries(H_i, H_f, schedule)
            programs = []
            for m, (H_m, U_m) in enumerate(zip(step_hamiltonians(H_i, H_f, schedule), unitaries), start=1):
                meta = {'step': m, 's': schedule.s(m)}
                if n == 1 and cfg.mode == 'paper-compat':
                    programs.append(decompose_diag_1q(U_m, cfg.peephole, meta))
                else:
                    programs.append(decompose_step(
                        H_m, schedule.dt, cfg.trotter_order, tolerance=cfg.trotter_tolerance,
                        max_slices=cfg.max_slices, peephole_pass=cfg.peephole, metadata=meta))
            prep = preparation_program(n, cfg.mode, cfg.preparation)
            full = with_readout(concatenate([prep] + programs, {'N': cfg.N}), {q: 'Z' for q in range(n)})
        self.log(f"[Gates] {len(programs)} step programs, {len(full)} gates in total")
        return programs, full

    def run(self, resume: Optional[ReductionStage] = None) -> FactorReport:
        """
        Raises:
            NoSplitConsistent: N is not a bi-prime of the assumed form
            EvolutionFailed: no readout lifted to a factorization after all retries
        """
        cfg = self.config
        self.log(f"\n{'=' * 60}\n[Pipeline] Factoring N={cfg.N} ({cfg.mode}, {cfg.encoding})\n{'=' * 60}")
        reduction = resume or self.reduce()
        reduced = reduction.reduced
        H_p, qubit_map, H_i, H_f = self.hamiltonians(reduced)
        ground = ground_states(H_p)
        n = qubit_map.n_qubits
        children = seed_children(cfg.seed, n)

        scan, bound, schedule = None, None, None
        run_result, programs, full = None, [], None
        attempts: List[dict] = []
        if n == 0:
            final = StateVector(0, np.ones(1, dtype=complex))
            with self.stage('readout'):
                counts = sample_joint(final, cfg.shots, children[-1])
                factors = extract_factors(counts, reduced, qubit_map=qubit_map)
            attempts.append({'T': None, 'M': None, 'outcome': 'classical'})
        else:
            with self.stage('spectrum'):
                scan = gap_scan(H_i, H_f, cfg.gap_resolution)
                schedule, bound = self.schedule(H_i, H_f, scan)
            factors = None
            for attempt in range(cfg.max_retries + 1):
                with self.stage('evolve'):
                    unitaries = step_unitaries(H_i, H_f, schedule)
                    run_result = evolve(initial_state(n, cfg.mode, cfg.preparation), unitaries,
                                        schedule, H_i, H_f, keep_trajectory=schedule.M <= cfg.max_qasm_steps)
                    run_result.min_gap = scan.min_gap
                final = run_result.final_state
                with self.stage('readout'):
                    counts = sample_joint(final, cfg.shots, children[-1])
                    try:
                        factors = extract_factors(counts, reduced, qubit_map=qubit_map)
                    except NotAFactorization as exc:
                        attempts.append({'T': schedule.T, 'M': schedule.M, 'outcome': str(exc)})
                        self.log(f"[Pipeline] attempt {attempt + 1}: {exc}")
                        schedule = Schedule(2 * schedule.T, 2 * schedule.M, schedule.J, schedule.mode)
                        continue
                attempts.append({'T': schedule.T, 'M': schedule.M, 'outcome': 'factored'})
                break
            if factors is None:
                raise EvolutionFailed(f"N={cfg.N}: no factorization after {len(attempts)} attempts")
            programs, full = self.decompose(H_i, H_f, schedule, run_result.unitaries)

        with self.stage('tomography'):
            tomo = [tomography(final, q, cfg.shots, children[3 * q:3 * q + 3]) for q in range(n)]
            steps: List[QubitTomography] = []
            if cfg.per_step_tomography and n == 1 and len(run_result.trajectory) > 2:
                per_step_seed = as_seed_sequence(cfg.seed).spawn(3 * n + 2)[-1]
                steps = trajectory_tomography(run_result.trajectory, cfg.shots, per_step_seed)

        phase_rows: List[PhaseRow] = []
        if schedule is not None and cfg.mode == 'paper-compat':
            phase_rows = phase_table(H_i, H_f, schedule)

        system = reduced.system()
        carries = implied_carries(system, *factors) or reduced.carry_values()
        report = FactorReport(
            N=cfg.N,
            split=tuple(reduced.split),
            factors=tuple(factors),
            factors_prime=all(is_prime(f) for f in factors),
            splits_tried=reduction.splits_tried,
            carries=carries,
            reduction=reduced.to_dict(),
            verified=reduction.verified,
            hamiltonian={**H_p.to_dict(), 'min_eigenvalue': ground.min_eigenvalue,
                         'ground_states': ground.states},
            qubit_map=qubit_map.to_dict(),
            schedule=schedule.to_dict() if schedule else None,
            runtime_bound=bound,
            gap=scan.to_dict(cfg.J) if scan else None,
            final_probabilities=[float(p) for p in final.probabilities()],
            counts=counts.to_dict(),
            tomography=[t.to_dict() for t in tomo],
            step_tomography=[t.to_dict() for t in steps],
            decomposition=[{**{k: v for k, v in p.metadata.items()}, 'gates': len(p)} for p in programs],
            attempts=attempts,
            config=cfg.to_dict(),
            system=system,
            scan=scan,
            phase_rows=phase_rows,
            programs=programs,
            full_program=full,
            run=run_result,
            timings=self.timings,
        )
        self.log(f"[Pipeline] N={cfg.N} = {factors[0]} x {factors[1]}")
        return report


def factor(config: RunConfig, resume: Optional[ReductionStage] = None) -> FactorReport:
    return FactoringPipeline(config).run(resume)


# ==================== Artifacts ====================

def table_text(report: FactorReport) -> str:
    system = report.system
    reduced = ReducedSystem.from_dict(report.reduction)
    lines = [f"N = {report.N} = {report.factors[0]} x {report.factors[1]}, split {report.split}",
             '', render_table(system), '', 'Column equations:']
    lines += [f"  {eq.render()}" for eq in system.equations]
    lines += ['', 'Carries: ' + ', '.join(f"C{c}={v}" for c, v in enumerate(report.carries))]
    lines += ['Substitutions:'] + [f"  {v} = {render(e)}" for v, e in reduced.substitutions.items()]
    lines += ['Residual equations:'] + [f"  {r.render()}" for r in reduced.residual_equations]
    return '\n'.join(lines) + '\n'


def emit_artifacts(report: FactorReport, config: RunConfig) -> List[Path]:
    """
    Write the requested outputs under `config.out_dir`; with none requested
    the report goes to standard output.
    """
    out = Path(config.out_dir)
    stem = f"N{report.N}"
    written: List[Path] = []
    if not config.outputs:
        print(report.to_json())
        return written
    if 'report-json' in config.outputs:
        report.save(out / f"{stem}_report.json")
        save_timings(report.timings, out / f"{stem}_timings.json")
        written += [out / f"{stem}_report.json", out / f"{stem}_timings.json"]
    if 'qasm' in config.outputs:
        if report.full_program is None:
            print(f"[Gates] No programs for N={report.N} (no qubits or too many steps)")
        else:
            for program in report.programs:
                written.append(save_qasm(program, out / 'qasm' / f"{stem}_step{program.metadata['step']}.qasm"))
            written.append(save_qasm(report.full_program, out / 'qasm' / f"{stem}_full.qasm"))
    if 'gap-csv' in config.outputs and report.scan is not None:
        path = out / f"{stem}_gap.csv"
        save_gap_csv(report.scan, str(path), config.J)
        written.append(path)
    if 'table-text' in config.outputs:
        path = out / f"{stem}_table.txt"
        write_text(path, table_text(report))
        written.append(path)
    if 'angle-table' in config.outputs and report.phase_rows:
        path = out / f"{stem}_angles.txt"
        write_text(path, render_phase_table(report.phase_rows) + '\n')
        written.append(path)
    if 'figures' in config.outputs:
        from .visualizer import generate_report_figures
        written += generate_report_figures(report, str(out / 'figures'))
    return written


def write_text(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
