import json

import numpy as np
from numpy.testing import assert_allclose

from src.python.adia import gap_scan, initial_hamiltonian, save_gap_csv
from src.python.pipeline import RunConfig, emit_artifacts, factor
from src.python.visualizer import generate_all_figures, load_gap_csv


def test_gap_csv_loads_back(tmp_path):
    H_i = initial_hamiltonian(1, 'paper-compat', 2.0)
    scan = gap_scan(H_i, 2.0 * np.eye(2, dtype=complex), 11)
    path = tmp_path / 'N35_gap.csv'
    save_gap_csv(scan, str(path), J=2.0)
    s, energies = load_gap_csv(str(path))
    assert_allclose(s, np.linspace(0, 1, 11), atol=1e-6)
    assert_allclose(energies, scan.energies / 2.0, atol=1e-9)


def test_figures_from_a_results_directory(tmp_path):
    cfg = RunConfig(N=35, mode='paper-compat', encoding='paper-compat', shots=256,
                    outputs=('report-json', 'gap-csv', 'figures'), out_dir=str(tmp_path))
    report = factor(cfg)
    written = emit_artifacts(report, cfg)
    assert (tmp_path / 'figures' / 'N35_spectrum.png') in written
    assert (tmp_path / 'figures' / 'N35_rho_step8.png').exists()

    summary = {'runs': [{'N': 35, 'timings': [t.to_dict() for t in report.timings]}]}
    (tmp_path / 'suite_summary.json').write_text(json.dumps(summary), encoding='utf-8')
    figures = generate_all_figures(str(tmp_path), str(tmp_path / 'all'))
    names = {p.name for p in figures}
    assert {'N35_spectrum.png', 'N35_probabilities.png', 'N35_rho_q0.png', 'suite_timings.png'} <= names
