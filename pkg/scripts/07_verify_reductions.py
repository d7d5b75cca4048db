#!/usr/bin/env python3
"""
07_verify_reductions.py
Exhaustively check the classical reduction of every admissible split below a limit
"""
import sys
import argparse
from pathlib import Path

from tqdm import tqdm

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.python.bitplan import BiPrimeInstance, build_system, enumerate_splits
from src.python.errors import Inconsistent, TooLarge
from src.python.instances import load_config, load_instances, generate_admissible
from src.python.reducer import ENCODINGS, reduce_split, verify_reduction


def main():
    parser = argparse.ArgumentParser(description="Verify reductions against the unreduced equations")
    parser.add_argument("--limit", type=int, help="Exclusive upper bound (default: suite.sweep_limit)")
    parser.add_argument("--encoding", choices=ENCODINGS, default="substitution")
    args = parser.parse_args()

    print("="*70)
    print("Hybrid Factoring - Reduction Sweep")
    print("="*70)

    config = load_config("./config/config.yaml")
    suite = config['suite']
    limit = args.limit or suite['sweep_limit']
    if Path(suite['instances_path']).exists() and args.limit is None:
        numbers = load_instances(suite['instances_path'])
    else:
        numbers = generate_admissible(limit).tolist()

    checked, inconsistent, skipped = 0, 0, 0
    failures = []
    for N in tqdm(numbers, desc=f"Verifying ({args.encoding})"):
        instance = BiPrimeInstance(int(N))
        for split in enumerate_splits(instance):
            try:
                reduced = reduce_split(instance, split, args.encoding)
                ok = verify_reduction(build_system(instance, split), reduced)
            except Inconsistent:
                inconsistent += 1
                continue
            except TooLarge:
                skipped += 1
                continue
            checked += 1
            if not ok:
                failures.append((int(N), split))

    print(f"\nInstances: {len(numbers)}")
    print(f"Splits verified: {checked}")
    print(f"Splits inconsistent: {inconsistent}")
    print(f"Splits skipped (too large): {skipped}")
    if failures:
        print(f"[ERROR] {len(failures)} reductions disagree with the original equations:")
        for N, split in failures[:20]:
            print(f"  N={N} split={split}")
        sys.exit(1)
    print("All reductions match.")


if __name__ == "__main__":
    main()
