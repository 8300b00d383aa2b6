"""Recover a flattening chart for a frame with a known answer.

The model frame (d/dt, d/dzbar) on R x C is pushed through a random degree-3
polynomial diffeomorphism.  The pipeline has no knowledge of that
diffeomorphism; it must rediscover a chart in which the structure is spanned
by the model fields again.  Because a flattening chart is only unique up to
composition with structure-preserving maps, the check is not "recover the
same polynomial" but "the residual report certifies a flat frame".

Run:  python3 demos/manufactured_recovery.py
"""

import numpy as np

from frobflat.frames import VectorField, pushforward
from frobflat.pipeline import flatten
from frobflat.series import PowerSeries, SeriesMap


def scrambled_model_frame(r, n, seed, size=0.05, dmax=8):
    d = r + 2 * n
    rng = np.random.default_rng(seed)
    comps = []
    for k in range(d):
        coeffs = {tuple(1 if i == k else 0 for i in range(d)): 1.0}
        for _ in range(4):
            alpha = tuple(int(a) for a in rng.integers(0, 4, d))
            if 2 <= sum(alpha) <= 3:
                coeffs[alpha] = coeffs.get(alpha, 0.0) + size * rng.standard_normal()
        comps.append(PowerSeries(d, dmax, coeffs))
    phi = SeriesMap(comps)
    model = [VectorField.model(r, n, dmax, k) for k in range(r + n)]
    return [pushforward(phi, V) for V in model]


def main():
    for (r, n) in [(1, 0), (0, 1), (1, 1)]:
        fields = scrambled_model_frame(r, n, seed=17 + r + 3 * n)
        result = flatten(fields)
        rep = result.report
        print(f"(r, n) = ({r}, {n}):  gamma = {result.chart.gamma}, "
              f"span {rep.span_residual:.3g}, "
              f"commutator {rep.commutator_residual:.3g}, "
              f"||A|| = {result.A_norm:.3g}")


if __name__ == "__main__":
    main()
