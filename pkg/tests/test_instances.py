import numpy as np
import pytest

from src.python.instances import (
    generate_admissible, is_admissible, is_prime, load_config, load_instances,
    oracle_factors, prime_sieve, save_instances, trial_division,
)


def test_prime_sieve_small():
    assert np.flatnonzero(prime_sieve(20)).tolist() == [2, 3, 5, 7, 11, 13, 17, 19]


@pytest.mark.parametrize("n, expected", [(35, (5, 7)), (21, (3, 7)), (551, (19, 29)),
                                         (9, None), (45, None), (30, None), (13, None)])
def test_oracle_factors(n, expected):
    assert oracle_factors(n) == expected


def test_trial_division_with_multiplicity():
    assert trial_division(360) == [2, 2, 2, 3, 3, 5]
    assert is_prime(97) and not is_prime(91)


def test_generate_admissible_matches_oracle():
    numbers = generate_admissible(200).tolist()
    expected = [n for n in range(9, 200) if is_admissible(n)]
    assert numbers == expected
    assert numbers[:4] == [15, 21, 33, 35]


def test_instances_roundtrip(tmp_path):
    path = tmp_path / "instances.json"
    save_instances(np.array([15, 35, 143]), str(path))
    assert load_instances(str(path)) == [15, 35, 143]


def test_load_config_reads_repo_config():
    config = load_config("./config/config.yaml")
    assert config['tomography']['shots'] == 8192
    assert config['schedule']['M'] == 8
