#!/usr/bin/env python3
"""
06_visualize.py
Draw spectra, readout probabilities, density matrices and suite timings
from the reports and gap scans already in the output directory.
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.python.instances import load_config
from src.python.visualizer import generate_all_figures


def main():
    parser = argparse.ArgumentParser(description="Figures from saved factoring results")
    parser.add_argument('--config', default='./config/config.yaml')
    parser.add_argument('--results-dir', help='Defaults to output.out_dir')
    parser.add_argument('--figures-dir', help='Defaults to <results-dir>/figures')
    args = parser.parse_args()

    config = load_config(args.config) if Path(args.config).exists() else {}
    results_dir = args.results_dir or config.get('output', {}).get('out_dir', './results')
    figures_dir = args.figures_dir or str(Path(results_dir) / 'figures')

    print("=" * 70)
    print(f"Hybrid Factoring - Figures from {results_dir}")
    print("=" * 70)

    written = generate_all_figures(results_dir, figures_dir)
    return 0 if written else 1


if __name__ == "__main__":
    sys.exit(main())
