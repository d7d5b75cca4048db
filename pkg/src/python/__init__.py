"""
Hybrid bi-prime factoring - Python package
"""
from .instances import (
    load_config,
    oracle_factors,
    is_admissible,
    generate_admissible,
)
from .bitplan import (
    BiPrimeInstance,
    BitEquationSystem,
    enumerate_splits,
    build_system,
    render_table,
)
from .reducer import ReducedSystem, propagate, reduce_split, verify_reduction
from .hamcomp import ZPolynomial, compile, compile_peng, ground_states
from .adia import Schedule, StateVector, evolve, gap_scan, runtime_bound, step_unitaries
from .gatedec import GateProgram, decompose_diag_1q, decompose_step, simulate_program
from .qasm import emit_qasm, parse_qasm
from .tomo import sample, reconstruct, extract_factors
from .pipeline import RunConfig, FactorReport, FactoringPipeline, factor, emit_artifacts
from .visualizer import generate_all_figures

__all__ = [
    # Instances
    'load_config',
    'oracle_factors',
    'is_admissible',
    'generate_admissible',
    # Bit equations and reduction
    'BiPrimeInstance',
    'BitEquationSystem',
    'enumerate_splits',
    'build_system',
    'render_table',
    'ReducedSystem',
    'propagate',
    'reduce_split',
    'verify_reduction',
    # Hamiltonians and evolution
    'ZPolynomial',
    'compile',
    'compile_peng',
    'ground_states',
    'Schedule',
    'StateVector',
    'evolve',
    'gap_scan',
    'runtime_bound',
    'step_unitaries',
    # Gates
    'GateProgram',
    'decompose_diag_1q',
    'decompose_step',
    'simulate_program',
    'emit_qasm',
    'parse_qasm',
    # Readout
    'sample',
    'reconstruct',
    'extract_factors',
    # Pipeline
    'RunConfig',
    'FactorReport',
    'FactoringPipeline',
    'factor',
    'emit_artifacts',
    'generate_all_figures',
]
