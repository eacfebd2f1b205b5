#!/usr/bin/env python3
"""Run the acceptance criteria and print one line per criterion.

Usage: python scripts/run_acceptance.py [N ...]
"""
import sys

from isoshell.acceptance import all_passed, run_all


def main(argv):
    select = [int(a) for a in argv] or None
    results = run_all(select, echo=print)
    total = sum(r.seconds for r in results)
    print(f"{len(results)} criteria in {total:.1f}s")
    return 0 if all_passed(results) else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
