import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.python.instances import oracle_factors  # noqa: E402

SUITE = [15, 21, 33, 35, 143, 551]


@pytest.fixture
def oracle():
    """Trial-division factor pair (p, q), p < q."""
    return oracle_factors


@pytest.fixture
def split_factorizations():
    """Every (P, Q) with the given bit lengths and P * Q = N, both orientations."""
    def _pairs(N, split):
        b_p, b_q = split
        pairs = set()
        for P in range(2 ** (b_p - 1) + 1, 2 ** b_p, 2):
            if N % P == 0:
                Q = N // P
                if Q.bit_length() == b_q and Q % 2 == 1:
                    pairs.add((P, Q))
        return pairs
    return _pairs
