"""
Instance generation utilities.
Admissible N are odd, square-free bi-primes; the sieve is vectorized with NumPy.
"""
import json
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml


def load_config(config_path: str = "./config/config.yaml") -> dict:
    """Load configuration file."""
    with open(config_path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f) or {}


def prime_sieve(limit: int) -> np.ndarray:
    """
    Sieve of Eratosthenes.

    Args:
        limit: exclusive upper bound

    Returns:
        Boolean array `is_prime` of length `limit`
    """
    is_prime = np.ones(max(limit, 2), dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit - 1) + 1 if limit > 2 else 2):
        if is_prime[p]:
            is_prime[p * p::p] = False
    return is_prime[:limit]


def is_prime(n: int) -> bool:
    """Deterministic primality by trial division (desk-scale n)."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


def trial_division(n: int) -> List[int]:
    """Prime factorization with multiplicity, ascending."""
    factors = []
    d = 2
    while d * d <= n:
        while n % d == 0:
            factors.append(d)
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        factors.append(n)
    return factors


def oracle_factors(n: int) -> Optional[Tuple[int, int]]:
    """
    Ground-truth factor pair of an odd square-free bi-prime.

    Returns:
        (p, q) with p < q, or None when n is not of that form
    """
    factors = trial_division(n)
    if len(factors) != 2 or factors[0] == factors[1] or factors[0] == 2:
        return None
    return factors[0], factors[1]


def is_admissible(n: int) -> bool:
    return n >= 9 and n % 2 == 1 and oracle_factors(n) is not None


def generate_admissible(limit: int, minimum: int = 9) -> np.ndarray:
    """
    Enumerate every odd square-free bi-prime in [minimum, limit).

    Args:
        limit: exclusive upper bound
        minimum: inclusive lower bound

    Returns:
        Sorted int64 array
    """
    primes = np.flatnonzero(prime_sieve(limit // 3 + 1))
    primes = primes[primes > 2]
    # Outer product of odd primes, keep p < q
    products = np.multiply.outer(primes.astype(np.int64), primes.astype(np.int64))
    upper = np.triu(np.ones_like(products, dtype=bool), k=1)
    values = products[upper]
    values = values[(values >= minimum) & (values < limit)]
    return np.unique(values)


def save_instances(numbers: np.ndarray, path: str):
    """Save instances with their oracle factors as JSON."""
    records: List[Dict[str, int]] = []
    for n in numbers.tolist():
        p, q = oracle_factors(int(n))
        records.append({'N': int(n), 'p': p, 'q': q, 'bits': int(n).bit_length()})
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(records, f, indent=2)
    print(f"[Instances] Saved {len(records)} instances to {path}")


def load_instances(path: str) -> List[int]:
    """Load instance numbers saved by `save_instances`."""
    with open(path, 'r', encoding='utf-8') as f:
        return [int(r['N']) for r in json.load(f)]
