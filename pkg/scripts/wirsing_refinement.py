"""Grid refinement study for the closed-form Wirsing pair.

Prints, for a ladder of steps h, the value b(1), the delay-equation residual
at t = 0.4 and t = 0.5 (in units of h), the on-grid Wirsing residual and the
sup-norm error of the deconvolved b. The tolerances in the test suite were
read off this table.
"""

from __future__ import annotations

import argparse

import numpy as np

from ehlab.wirsing import (
    KAPPA_HB,
    POS_END,
    QUARTER,
    StepFunction,
    delay_equation_residual,
    heathbrown_reference,
    solve_b_given_a,
    wirsing_residual,
)


def deconvolution_error(h: float) -> float:
    a, _ = heathbrown_reference(0.32, h)
    b = solve_b_given_a(a, KAPPA_HB)
    mid = (np.arange(b.n) + 0.5) * h
    neg = (mid > KAPPA_HB + 5 * h) & (mid <= QUARTER - 5 * h)
    pos = (mid > QUARTER + 5 * h) & (mid <= POS_END - 5 * h)
    return float(max(np.abs(b.values[neg] + 1).max(), np.abs(b.values[pos] - 1).max()))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", default="4e-4,2e-4,1e-4,5e-5,2.5e-5")
    ap.add_argument("--T", type=float, default=1.05)
    args = ap.parse_args(argv)
    print("h\tb_at_1\tdelay_0.4_over_h\tdelay_0.5_over_h\twirsing_over_h\tdeconv_err")
    for h in (float(s) for s in args.steps.split(",")):
        a, b = heathbrown_reference(args.T, h)
        row = (
            h,
            b(1.0),
            delay_equation_residual(b, 0.4) / h,
            delay_equation_residual(b, 0.5) / h,
            wirsing_residual(a, b, upto=POS_END, exclude=(KAPPA_HB, QUARTER)) / h,
            deconvolution_error(h),
        )
        print("\t".join(repr(float(v)) for v in row))


if __name__ == "__main__":
    main()
