"""Empirical maximal escape index per (dimension, number of cosets).

Only the dichotomy is a theorem; the maxima printed here are observations.
"""

from __future__ import annotations

import argparse

from ehlab.coset_escape import verify_proposition


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--order-limit", type=int, default=20)
    ap.add_argument("--samples", type=int, default=0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-d", type=int, default=2)
    ap.add_argument("--max-m", type=int, default=3)
    args = ap.parse_args(argv)
    print("d\tm\tinstances\tviolations\tmax_k")
    for d in range(1, args.max_d + 1):
        for m in range(1, args.max_m + 1):
            rep = verify_proposition(d, m, args.order_limit, seed=args.seed, samples=args.samples)
            print(f"{d}\t{m}\t{rep.instances}\t{rep.violations}\t{rep.max_k}")


if __name__ == "__main__":
    main()
