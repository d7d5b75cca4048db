"""
Visualization utilities for factoring runs.
Spectrum of H(s), reconstructed density matrices, readout probabilities and suite timings.
"""
import json
from pathlib import Path
from typing import List

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

plt.rcParams['font.sans-serif'] = ['DejaVu Sans']
plt.rcParams['axes.unicode_minus'] = False

ENTRY_LABELS = ['00', '01', '10', '11']


def load_results(path: str) -> dict:
    """Load a report or suite summary JSON."""
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def load_gap_csv(path: str):
    """(s, energies) from a gap-scan CSV; energies are in units of J."""
    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:]


def _save(fig, output_path: Path) -> Path:
    output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output_path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    print(f"[Visualizer] Saved {output_path}")
    return output_path


def plot_spectrum(s: np.ndarray, energies: np.ndarray, output_path: str,
                  title: str = 'Instantaneous spectrum') -> Path:
    """
    Every level of H(s) against s.
    The lowest level is drawn heavier.
    """
    fig, ax = plt.subplots(figsize=(8, 6))
    for k in range(energies.shape[1]):
        ax.plot(s, energies[:, k], linewidth=2.5 if k == 0 else 1.2,
                color='#e74c3c' if k == 0 else '#3498db', alpha=1.0 if k == 0 else 0.7)
    ax.set_xlabel('s = t / T', fontsize=12)
    ax.set_ylabel('Energy / J', fontsize=12)
    ax.set_title(title, fontsize=14, fontweight='bold')
    ax.set_xlim(0, 1)
    ax.grid(True, alpha=0.3)
    plt.tight_layout()
    return _save(fig, Path(output_path))


def plot_density_matrix(entry: dict, output_path: str, title: str) -> Path:
    """Real and imaginary parts of the estimate next to the exact state."""
    fig, axes = plt.subplots(1, 2, figsize=(12, 5))
    x = np.arange(4)
    width = 0.35
    for ax, part in zip(axes, ('real', 'imag')):
        estimate = np.asarray(entry['estimate'][part]).ravel()
        exact = np.asarray(entry['exact'][part]).ravel()
        ax.bar(x - width / 2, estimate, width, label='Reconstructed', color='#3498db')
        ax.bar(x + width / 2, exact, width, label='Simulated', color='#2ecc71')
        ax.set_xticks(x)
        ax.set_xticklabels([f"rho{lbl}" for lbl in ENTRY_LABELS])
        ax.set_ylim(-1, 1)
        ax.axhline(0, color='black', linewidth=0.8)
        ax.set_title(f"{'Real' if part == 'real' else 'Imaginary'} part", fontsize=12)
        ax.grid(True, alpha=0.3, axis='y')
        ax.legend()
    fig.suptitle(title, fontsize=14, fontweight='bold')
    plt.tight_layout()
    return _save(fig, Path(output_path))


def plot_final_probabilities(report: dict, output_path: str) -> Path:
    probs = report['final_probabilities']
    n = max(report['qubit_map']['n_qubits'], 1)
    labels = [format(i, f'0{n}b') for i in range(len(probs))]
    ground = set(report['hamiltonian'].get('ground_states', []))
    colors = ['#2ecc71' if i in ground else '#95a5a6' for i in range(len(probs))]

    fig, ax = plt.subplots(figsize=(max(6, len(probs) * 0.5), 5))
    bars = ax.bar(labels, probs, color=colors)
    for bar, p in zip(bars, probs):
        if p > 0.01:
            ax.text(bar.get_x() + bar.get_width() / 2, bar.get_height() + 0.01,
                    f'{p:.3f}', ha='center', va='bottom', fontsize=9)
    ax.set_ylim(0, 1.1)
    ax.set_xlabel('Basis state (qubit 0 rightmost)', fontsize=12)
    ax.set_ylabel('Probability', fontsize=12)
    P, Q = report['factors']
    ax.set_title(f"N = {report['N']} = {P} x {Q}: final populations", fontsize=14, fontweight='bold')
    ax.tick_params(axis='x', rotation=90 if len(probs) > 16 else 0)
    ax.grid(True, alpha=0.3, axis='y')
    plt.tight_layout()
    return _save(fig, Path(output_path))


def plot_suite_timings(summary: dict, output_path: str) -> Path:
    """Stacked per-stage wall time for each N of a suite run."""
    runs = [r for r in summary.get('runs', []) if r.get('timings')]
    stages = []
    for run in runs:
        for t in run['timings']:
            if t['stage'] not in stages:
                stages.append(t['stage'])

    fig, ax = plt.subplots(figsize=(10, 6))
    x = np.arange(len(runs))
    bottom = np.zeros(len(runs))
    cmap = plt.get_cmap('tab10')
    for k, stage in enumerate(stages):
        values = np.array([sum(t['seconds'] for t in run['timings'] if t['stage'] == stage)
                           for run in runs])
        ax.bar(x, values, 0.6, bottom=bottom, label=stage, color=cmap(k % 10))
        bottom += values
    ax.set_xticks(x)
    ax.set_xticklabels([str(run['N']) for run in runs])
    ax.set_xlabel('N', fontsize=12)
    ax.set_ylabel('Time (seconds)', fontsize=12)
    ax.set_title('Suite wall time by stage', fontsize=14, fontweight='bold')
    ax.legend(loc='upper left')
    ax.grid(True, alpha=0.3, axis='y')
    plt.tight_layout()
    return _save(fig, Path(output_path))


def generate_report_figures(report, output_dir: str = "./results/figures") -> List[Path]:
    """Figures for one in-memory FactorReport."""
    out = Path(output_dir)
    stem = f"N{report.N}"
    doc = report.to_dict()
    written = []
    if report.scan is not None:
        J = report.config['J']
        written.append(plot_spectrum(report.scan.s_values, report.scan.energies / J,
                                     out / f"{stem}_spectrum.png", f"N = {report.N}: spectrum of H(s)"))
    written.append(plot_final_probabilities(doc, out / f"{stem}_probabilities.png"))
    for entry in doc['tomography']:
        q = entry['qubit']
        written.append(plot_density_matrix(entry, out / f"{stem}_rho_q{q}.png",
                                           f"N = {report.N}: qubit {q} after the last step"))
    for m, entry in enumerate(doc['step_tomography'], start=1):
        written.append(plot_density_matrix(entry, out / f"{stem}_rho_step{m}.png",
                                           f"N = {report.N}: qubit 0 after step {m}"))
    return written


def generate_all_figures(
    results_dir: str = "./results",
    output_dir: str = "./results/figures"
) -> List[Path]:
    """Figures for every report, gap scan and suite summary found in `results_dir`."""
    print("\n" + "=" * 60)
    print("Generating Visualization Figures")
    print("=" * 60)

    results = Path(results_dir)
    out = Path(output_dir)
    written = []
    for path in sorted(results.glob('*_gap.csv')):
        s, energies = load_gap_csv(str(path))
        stem = path.stem.replace('_gap', '')
        written.append(plot_spectrum(s, energies, out / f"{stem}_spectrum.png", f"{stem}: spectrum of H(s)"))
    for path in sorted(results.glob('*_report.json')):
        report = load_results(str(path))
        stem = path.stem.replace('_report', '')
        written.append(plot_final_probabilities(report, out / f"{stem}_probabilities.png"))
        for entry in report.get('tomography', []):
            written.append(plot_density_matrix(entry, out / f"{stem}_rho_q{entry['qubit']}.png",
                                               f"{stem}: qubit {entry['qubit']}"))
    summary_path = results / 'suite_summary.json'
    if summary_path.exists():
        written.append(plot_suite_timings(load_results(str(summary_path)), out / 'suite_timings.png'))
    if not written:
        print(f"[Visualizer] No results found in {results_dir}")

    print(f"\n[Visualizer] {len(written)} figures written to {output_dir}")
    return written


if __name__ == "__main__":
    generate_all_figures()
