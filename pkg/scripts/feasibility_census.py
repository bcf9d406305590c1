"""Count 0/1 patterns of a given size by their scalability verdict for uniform margins.

Usage: python scripts/feasibility_census.py [--n 3]
"""
import argparse
import collections
import itertools

import numpy as np

from scalekit import MarginSpec, Verdict, analyze_structure, scalability


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3, help="side length, at most 4")
    args = ap.parse_args()
    if not 1 <= args.n <= 4:
        ap.error("--n must be between 1 and 4")

    n = args.n
    m = MarginSpec.uniform(n)
    counts = collections.Counter()
    mismatches = 0
    for bits in itertools.product([0, 1], repeat=n * n):
        A = np.array(bits, dtype=float).reshape(n, n)
        verdict = scalability(A, m).verdict
        counts[verdict.value] += 1
        total = bool(analyze_structure(A).has_total_support)
        mismatches += total != (verdict == Verdict.EXACT)
    for name, k in sorted(counts.items()):
        print(f"{name:<12} {k}")
    print(f"total support disagreements: {mismatches}")


if __name__ == "__main__":
    main()
