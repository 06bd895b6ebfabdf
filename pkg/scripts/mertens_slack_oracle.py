"""Derive the finite-q slack used for the density-profile checks.

For a segment ``q^s <= n < q^t`` the profile increments are bounded by the
harmonic and ``Lambda(n)/n`` sums over the segment, so

    |F(t) - F(s)| <= |t - s| + 2 E / log q,   E = max_x |sum_{n<=x} w(n)/n - log x|,

with ``w = 1`` for ``A_q`` and ``w = Lambda`` for ``B_q``. This script computes
``E`` for both weights up to a limit and prints ``2E``; any constant above
the larger value is a valid slack. The tests use 3.
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from ehlab.core_arith import build_sieve


def max_mertens_error(limit: int) -> tuple[float, float]:
    sieve = build_sieve(limit)
    n = np.arange(1, limit + 1, dtype=float)
    logs = np.log(n)
    harmonic = np.cumsum(1 / n)
    mangoldt = np.cumsum(sieve.mangoldt[1:] / n)
    # the partial sums are step functions: check both ends of each step
    err_h = max(np.max(np.abs(harmonic - logs)), np.max(np.abs(harmonic[:-1] - logs[1:])))
    err_m = max(np.max(np.abs(mangoldt - logs)), np.max(np.abs(mangoldt[:-1] - logs[1:])))
    return float(err_h), float(err_m)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--limit", type=int, default=10**6)
    args = ap.parse_args(argv)
    err_h, err_m = max_mertens_error(args.limit)
    print(f"# limit = {args.limit}")
    print(f"harmonic_max_error\t{err_h!r}")
    print(f"mangoldt_max_error\t{err_m!r}")
    print(f"slack_numerator_needed\t{2 * max(err_h, err_m)!r}")
    print(f"slack_numerator_used\t3")
    print(f"ok\t{2 * max(err_h, err_m) < 3}")


if __name__ == "__main__":
    main()
