#!/usr/bin/env python3
"""
hybrid_factor.py
Command line entry point: factor, reduce, spectrum and qasm verbs
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.python.cli import main


if __name__ == "__main__":
    sys.exit(main())
