"""Block-contract matrix over the shipped groups.

Runs the orthogonal-block checker on every builtin group and prints a
table: dimensions, ranks, holds, max residual, and failure witness for
the one group designed to fail. Exit status is 0 iff the observed
pattern matches the shipped expectations.
"""

import argparse
import sys

from nilspec.groups import BUILTIN_GROUPS, builtin_group, check_assumption_a, dimensions

EXPECT_FAIL = {"h1xh1_product"}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--tol", type=float, default=1e-10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'group':<24}{'d':>4}{'Q':>4}  ranks      holds  max_residual  witness")
    bad = 0
    for name in BUILTIN_GROUPS:
        g, dec = builtin_group(name)
        rep = check_assumption_a(g, dec, n_samples=args.samples, tol=args.tol, seed=args.seed)
        d, Q = dimensions(g)
        witness = ""
        if rep.failure_witness is not None:
            witness = "(" + ", ".join(f"{v:+.2f}" for v in rep.failure_witness) + ")"
        ranks = ",".join(str(r) for r in dec.ranks)
        print(
            f"{name:<24}{d:>4}{Q:>4}  ({ranks:<6})  {str(rep.holds):<5}"
            f"  {rep.max_residual:>12.3e}  {witness}"
        )
        if rep.holds == (name in EXPECT_FAIL):
            bad += 1
            print(f"  -> unexpected outcome for {name}", file=sys.stderr)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
