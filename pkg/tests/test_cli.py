import json

import pytest

from src.python.cli import build_parser, main
from src.python.errors import EncodingUnsupported, InvalidInstance, NoSplitConsistent, exit_code_for
from src.python.qasm import parse_qasm

PAPER = ['--mode', 'paper-compat', '--encoding', 'paper-compat']


@pytest.fixture
def run(tmp_path):
    """main() with a config file that does not exist, so only flags apply."""
    def _run(*argv):
        verb, *rest = argv
        return main([verb, '--config', str(tmp_path / 'absent.yaml'), *rest])
    return _run


def test_exit_codes():
    assert exit_code_for(NoSplitConsistent('x')) == 2
    assert exit_code_for(InvalidInstance('x')) == 4
    assert exit_code_for(EncodingUnsupported('x')) == 4
    assert exit_code_for(KeyError('x')) == 4
    assert exit_code_for(RuntimeError('x')) == 1


def test_parser_knows_every_verb():
    parser = build_parser()
    for verb in ('factor', 'reduce', 'spectrum', 'qasm'):
        args = parser.parse_args([verb, '--n', '35'])
        assert args.verb == verb
        assert args.n == 35


def test_reduce_prints_the_stage(run, capsys):
    assert run('reduce', '--n', '35', *PAPER) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc['N'] == 35
    assert doc['reduction']['split'] == [3, 3]
    assert doc['verified'] is True


@pytest.mark.parametrize("argv", [
    ('reduce', '--n', '34'),
    ('reduce', '--n', '49'),
    ('reduce',),
    ('reduce', '--n', '35', '--emit', 'bogus'),
    ('reduce', '--n', '35', '--mode', 'ising'),
])
def test_invalid_input(run, argv):
    assert run(*argv) == 4


def test_missing_verb_is_invalid_input():
    assert main([]) == 4


def test_prime_has_no_split(run):
    assert run('reduce', '--n', '13') == 2


def test_factor_writes_requested_files(run, tmp_path):
    out = tmp_path / 'out'
    code = run('factor', '--n', '35', *PAPER, '--shots', '256',
               '--emit', 'report-json,table-text,angle-table', '--out-dir', str(out))
    assert code == 0
    assert (out / 'N35_table.txt').exists()
    assert '0.9375' in (out / 'N35_angles.txt').read_text(encoding='utf-8')
    report = json.loads((out / 'N35_report.json').read_text(encoding='utf-8'))
    assert report['factors'] == [5, 7]
    assert report['config']['shots'] == 256


def test_resume_from_reduce_output(run, tmp_path):
    out = tmp_path / 'out'
    assert run('reduce', '--n', '35', *PAPER, '--emit', 'report-json', '--out-dir', str(out)) == 0
    stage = out / 'N35_reduction.json'
    assert stage.exists()

    # the stored encoding applies when --encoding is absent
    assert run('factor', '--from-json', str(stage), '--emit', 'report-json', '--out-dir', str(out)) == 0
    report = json.loads((out / 'N35_report.json').read_text(encoding='utf-8'))
    assert report['factors'] == [5, 7]

    assert run('factor', '--from-json', str(stage), *PAPER, '--emit', 'report-json',
               '--out-dir', str(out)) == 0


def test_resume_rejects_a_different_encoding(run, tmp_path, capsys):
    out = tmp_path / 'out'
    assert run('reduce', '--n', '35', *PAPER, '--emit', 'report-json', '--out-dir', str(out)) == 0
    stage = out / 'N35_reduction.json'
    assert run('factor', '--from-json', str(stage), '--encoding', 'substitution',
               '--out-dir', str(out)) == 4
    assert 'does not match' in capsys.readouterr().err


def test_unwritable_table_names_the_path(run, tmp_path, capsys):
    out = tmp_path / 'out'
    blocker = out / 'N35_table.txt'
    blocker.mkdir(parents=True)
    assert run('reduce', '--n', '35', *PAPER, '--emit', 'table-text', '--out-dir', str(out)) == 1
    assert str(blocker) in capsys.readouterr().err


def test_spectrum_csv(run, capsys):
    assert run('spectrum', '--n', '35', *PAPER) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == 's,level0,level1'
    rows = [[float(v) for v in line.split(',')] for line in lines[1:]]
    assert len(rows) == 101
    assert rows[0] == [0.0, -1.0, 1.0]
    assert all(r[2] - r[1] > 0 for r in rows[:-1])
    assert rows[-1][0] == 1.0
    assert rows[-1][1] == pytest.approx(1.0)
    assert rows[-1][2] == pytest.approx(1.0)


def test_qasm_prints_the_full_program(run, capsys):
    assert run('qasm', '--n', '35', *PAPER) == 0
    program = parse_qasm(capsys.readouterr().out)
    assert program.n_qubits == 1
    assert program.measured == (0,)
    assert len(program) == 1 + 8 * 4


def test_classical_instance_has_no_gates(run, capsys):
    assert run('qasm', '--n', '15') == 0
    assert 'reduces classically' in capsys.readouterr().out
