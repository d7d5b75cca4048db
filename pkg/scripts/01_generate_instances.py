#!/usr/bin/env python3
"""
01_generate_instances.py
Enumerate admissible bi-primes below the sweep limit with their oracle factors
"""
import sys
import argparse
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.python.instances import load_config, generate_admissible, save_instances


def main():
    parser = argparse.ArgumentParser(description="Generate admissible bi-prime instances")
    parser.add_argument("--limit", type=int, help="Exclusive upper bound (default: suite.sweep_limit)")
    parser.add_argument("--force", action="store_true", help="Overwrite an existing instance file")
    args = parser.parse_args()

    print("="*70)
    print("Hybrid Factoring - Instance Generation")
    print("="*70)

    config = load_config("./config/config.yaml")
    suite = config['suite']
    limit = args.limit or suite['sweep_limit']
    output_path = suite['instances_path']

    if Path(output_path).exists() and not args.force:
        print(f"[SKIP] Instances already exist at {output_path}")
        print("  Use --force to regenerate")
        return

    numbers = generate_admissible(limit)
    print(f"Limit: {limit}")
    print(f"Admissible instances: {len(numbers)}")
    print(f"Largest: {int(numbers[-1]) if len(numbers) else None}")
    save_instances(numbers, output_path)


if __name__ == "__main__":
    main()
