"""A short tour of the norm estimators.

Shows the exact coefficient norm on truncated series, the sampled-sup lower
bound, and the grid-based Zygmund estimator with its known closed-form
values for simple functions.

Run:  python3 demos/norms_tour.py
"""

import math

import numpy as np

from frobflat.funcspaces import (
    GridField,
    anorm,
    bnorm_estimate,
    zygmund_estimate,
)
from frobflat.series import PowerSeries


def main():
    # truncated exp(t): coefficient norm at radius 1 is the partial sum of e
    f = PowerSeries(1, 8, {(k,): 1.0 / math.factorial(k) for k in range(9)})
    print(f"anorm(exp-to-degree-8, 1.0) = {anorm(f, 1.0).value:.8f}  "
          f"(sum of 1/k! = {sum(1.0 / math.factorial(k) for k in range(9)):.8f})")

    # sampled sup never exceeds the coefficient norm
    t2 = PowerSeries(1, 8, {(2,): 1.0})
    print(f"bnorm(t^2, 0.5) = {bnorm_estimate(t2, 0.5).value:.4f}  "
          f"<= anorm = {anorm(t2, 0.5).value:.4f}")

    # Zygmund estimate of f(x) = x at s = 1: the closed form is 1 + sqrt(2)
    gf = GridField.from_function(
        lambda pts: pts[:, :1].astype(complex), 1.0, (257,)
    )
    est = zygmund_estimate(gf, 1.0)
    print(f"zygmund(x, s=1) = {est.value:.5f}  "
          f"(closed form 1 + sqrt(2) = {1 + math.sqrt(2):.5f}, "
          f"estimated from below: {est.lower_bound})")


if __name__ == "__main__":
    main()
