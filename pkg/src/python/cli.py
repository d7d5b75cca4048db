"""
Command line: factor, reduce, spectrum and qasm verbs.

Each verb takes either --n or --from-json (a reduce-stage document or a
factor report) and returns an exit code from `errors.exit_code_for`.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence, Tuple

from .adia import gap_scan, save_gap_csv
from .bitplan import render_table
from .errors import EXIT_OK, FactoringError, exit_code_for
from .instances import load_config
from .pipeline import (
    OUTPUT_KINDS, FactoringPipeline, ReductionStage, RunConfig, emit_artifacts, factor, write_text,
)
from .qasm import emit_qasm, save_qasm


class _Parser(argparse.ArgumentParser):
    """Usage errors become ValueError so they map to the invalid-input exit code."""

    def error(self, message):
        raise ValueError(message)


def _emit_list(text: str) -> Tuple[str, ...]:
    kinds = tuple(k.strip() for k in text.split(',') if k.strip())
    unknown = [k for k in kinds if k not in OUTPUT_KINDS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown output kind(s) {unknown}; choose from {OUTPUT_KINDS}")
    return kinds


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--n', type=int, help='Bi-prime to factor')
    common.add_argument('--from-json', help='Resume from a reduce-stage JSON or a factor report')
    common.add_argument('--config', default='./config/config.yaml', help='YAML configuration file')
    common.add_argument('--mode', choices=['paper-compat', 'transverse'])
    common.add_argument('--encoding', choices=['substitution', 'paper-compat'])
    common.add_argument('--steps', type=int, help='Number of piecewise-constant steps M')
    common.add_argument('--time-us', type=float, help='Total evolution time T in microseconds')
    common.add_argument('--coupling-j', type=float, help='Coupling J in rad/s')
    common.add_argument('--shots', type=int)
    common.add_argument('--seed', type=int)
    common.add_argument('--emit', type=_emit_list, help=f"Comma list of {', '.join(OUTPUT_KINDS)}")
    common.add_argument('--out-dir', help='Output directory')
    common.add_argument('--verbose', action='store_true')

    parser = _Parser(prog='hybrid_factor', description='Hybrid classical/adiabatic bi-prime factoring')
    verbs = parser.add_subparsers(dest='verb', required=True)
    verbs.add_parser('factor', parents=[common], help='Run the full pipeline')
    verbs.add_parser('reduce', parents=[common], help='Classical reduction only')
    verbs.add_parser('spectrum', parents=[common], help='Gap scan of H(s) only')
    verbs.add_parser('qasm', parents=[common], help='Gate decomposition only')
    return parser


def resolve(args: argparse.Namespace) -> Tuple[RunConfig, Optional[ReductionStage]]:
    """
    RunConfig from file, prior JSON and flags (flags win).

    A resumed reduction keeps its stored encoding unless --encoding names another,
    which is an error.
    """
    overrides = {
        'N': args.n,
        'mode': args.mode,
        'encoding': args.encoding,
        'M': args.steps,
        'T': args.time_us * 1e-6 if args.time_us is not None else None,
        'J': args.coupling_j,
        'shots': args.shots,
        'seed': args.seed,
        'outputs': args.emit,
        'out_dir': args.out_dir,
        'verbose': True if args.verbose else None,
    }
    config = load_config(args.config) if Path(args.config).exists() else {}
    if not args.from_json:
        if args.n is None:
            raise ValueError("either --n or --from-json is required")
        return RunConfig.from_config(config, **overrides), None

    with open(args.from_json, 'r', encoding='utf-8') as f:
        doc = json.load(f)
    resume = ReductionStage.from_dict(doc)
    overrides['N'] = resume.N
    if args.encoding is None:
        overrides['encoding'] = resume.reduced.encoding
    if 'config' in doc:
        run_config = RunConfig.from_dict(doc['config'], **overrides)
    else:
        run_config = RunConfig.from_config(config, **overrides)
    if run_config.encoding != resume.reduced.encoding:
        raise ValueError(f"--encoding {run_config.encoding} does not match the stored "
                         f"reduction ({resume.reduced.encoding})")
    return run_config, resume


def cmd_factor(cfg: RunConfig, resume: Optional[ReductionStage]) -> int:
    report = factor(cfg, resume)
    emit_artifacts(report, cfg)
    print(f"[CLI] {report.N} = {report.factors[0]} x {report.factors[1]} (split {report.split})", file=sys.stderr)
    return EXIT_OK


def cmd_reduce(cfg: RunConfig, resume: Optional[ReductionStage]) -> int:
    stage = resume or FactoringPipeline(cfg).reduce()
    if not cfg.outputs:
        print(json.dumps(stage.to_dict(), indent=2, ensure_ascii=False))
        return EXIT_OK
    out = Path(cfg.out_dir)
    stage.save(str(out / f"N{stage.N}_reduction.json"))
    if 'table-text' in cfg.outputs:
        system = stage.reduced.system()
        text = render_table(system) + '\n\n' + '\n'.join(eq.render() for eq in system.equations) + '\n'
        write_text(out / f"N{stage.N}_table.txt", text)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, resume: Optional[ReductionStage]) -> int:
    pipeline = FactoringPipeline(cfg)
    stage = resume or pipeline.reduce()
    _, _, H_i, H_f = pipeline.hamiltonians(stage.reduced)
    if H_i is None:
        print(f"[CLI] N={cfg.N} reduces classically; no spectrum to scan")
        return EXIT_OK
    scan = gap_scan(H_i, H_f, cfg.gap_resolution)
    if cfg.outputs:
        save_gap_csv(scan, str(Path(cfg.out_dir) / f"N{cfg.N}_gap.csv"), cfg.J)
    else:
        sys.stdout.write(scan.to_csv(cfg.J))
    print(f"[CLI] min gap {scan.min_gap / cfg.J:.6g} J at s={scan.min_gap_s:.3f}, "
          f"ground degeneracy {scan.ground_degeneracy}", file=sys.stderr)
    return EXIT_OK


def cmd_qasm(cfg: RunConfig, resume: Optional[ReductionStage]) -> int:
    pipeline = FactoringPipeline(cfg)
    stage = resume or pipeline.reduce()
    _, _, H_i, H_f = pipeline.hamiltonians(stage.reduced)
    if H_i is None:
        print(f"[CLI] N={cfg.N} reduces classically; no gates to emit")
        return EXIT_OK
    scan = gap_scan(H_i, H_f, cfg.gap_resolution)
    schedule, _ = pipeline.schedule(H_i, H_f, scan)
    programs, full = pipeline.decompose(H_i, H_f, schedule)
    if full is None:
        print(f"[CLI] M={schedule.M} exceeds max_qasm_steps={cfg.max_qasm_steps}; nothing emitted")
        return EXIT_OK
    if not cfg.outputs:
        sys.stdout.write(emit_qasm(full))
        return EXIT_OK
    qasm_dir = Path(cfg.out_dir) / 'qasm'
    for program in programs:
        save_qasm(program, str(qasm_dir / f"N{cfg.N}_step{program.metadata['step']}.qasm"))
    save_qasm(full, str(qasm_dir / f"N{cfg.N}_full.qasm"))
    print(f"[CLI] {len(programs)} step programs written to {qasm_dir}")
    return EXIT_OK


COMMANDS = {
    'factor': cmd_factor,
    'reduce': cmd_reduce,
    'spectrum': cmd_spectrum,
    'qasm': cmd_qasm,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg, resume = resolve(args)
        return COMMANDS[args.verb](cfg, resume)
    except (FactoringError, ValueError, KeyError, OSError) as exc:
        print(f"[CLI] {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == '__main__':
    sys.exit(main())
