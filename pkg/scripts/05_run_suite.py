#!/usr/bin/env python3
"""
05_run_suite.py
Factor every number of the configured suite and compare with the trial-division oracle
"""
import sys
import json
from datetime import datetime
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.python.errors import FactoringError
from src.python.instances import load_config, oracle_factors
from src.python.pipeline import RunConfig, emit_artifacts, factor
from src.python.visualizer import generate_all_figures


def run_one(config: dict, N: int) -> dict:
    cfg = RunConfig.from_config(config, N=N)
    try:
        report = factor(cfg)
    except FactoringError as exc:
        print(f"[FAIL] N={N}: {type(exc).__name__}: {exc}")
        return {'N': N, 'oracle': list(oracle_factors(N) or []), 'error': str(exc), 'timings': []}
    emit_artifacts(report, cfg)
    expected = oracle_factors(N)
    match = tuple(report.factors) == expected
    print(f"[{'OK' if match else 'MISMATCH'}] N={N} = {report.factors[0]} x {report.factors[1]} "
          f"(split {report.split}, {report.qubit_map['n_qubits']} qubits)")
    return {
        'N': N,
        'factors': list(report.factors),
        'oracle': list(expected),
        'match': match,
        'split': list(report.split),
        'n_qubits': report.qubit_map['n_qubits'],
        'attempts': report.attempts,
        'timings': [t.to_dict() for t in report.timings],
    }


def main():
    print("="*70)
    print("Hybrid Factoring - Full Suite")
    print("="*70)

    config = load_config("./config/config.yaml")
    suite = config['suite']
    runs = [run_one(config, int(N)) for N in suite['numbers']]

    summary = {
        'timestamp': datetime.now().isoformat(),
        'mode': config['instance']['mode'],
        'encoding': config['encoding']['scheme'],
        'runs': runs,
        'all_match': all(r.get('match', False) for r in runs),
    }
    summary_path = Path(suite['summary_path'])
    summary_path.parent.mkdir(parents=True, exist_ok=True)
    with open(summary_path, 'w', encoding='utf-8') as f:
        json.dump(summary, f, indent=2)
    print(f"\nSummary saved to {summary_path}")

    generate_all_figures(str(summary_path.parent), str(summary_path.parent / "figures"))

    print("\n" + "="*70)
    print(f"Suite complete: {sum(r.get('match', False) for r in runs)}/{len(runs)} match the oracle")
    print("="*70)


if __name__ == "__main__":
    main()
