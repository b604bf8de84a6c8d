#!/usr/bin/env python3
"""
Automated test runner without user interaction
"""

import sys
import os
import traceback
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import test_constants
import test_geometry
import test_closed_form
import test_operator
import test_solver
import test_boundary
import test_moving_plane
import test_mp_harness
import test_cli

MODULES = [
    test_constants,
    test_geometry,
    test_closed_form,
    test_operator,
    test_solver,
    test_boundary,
    test_moving_plane,
    test_mp_harness,
    test_cli,
]


def main():
    """Run all tests automatically"""
    print("=== Automated fraclap Validation ===")
    failures = []
    count = 0
    for module in MODULES:
        print(f"\n=== {module.__name__} ===")
        for name in sorted(n for n in dir(module) if n.startswith("test_")):
            test = getattr(module, name)
            if not callable(test):
                continue
            count += 1
            try:
                test()
            except Exception as e:
                traceback.print_exc()
                print(f"✗ {module.__name__}.{name}: {e}")
                failures.append(f"{module.__name__}.{name}")

    print("\n=== Summary ===")
    print(f"{count - len(failures)}/{count} tests passed")
    for name in failures:
        print(f"✗ {name}")
    return not failures


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
