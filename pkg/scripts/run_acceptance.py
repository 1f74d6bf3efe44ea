#!/usr/bin/env python3
"""Run the acceptance suite and print one PASS/FAIL line per criterion.

Equivalent to `pytest tests/test_acceptance.py -s`, kept as a script so the
whole gate can be driven without remembering pytest flags.  Expect roughly
half an hour single-threaded; the per-criterion lines stream as they finish.
"""

import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    root = Path(__file__).resolve().parent.parent
    sys.exit(pytest.main([str(root / "tests" / "test_acceptance.py"),
                          "-s", "-v", *sys.argv[1:]]))
