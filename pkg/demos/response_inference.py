"""Learning the noisy response from data.

Samples the sensor at 2n+1 evenly spaced phases, fits the unique degree-n
trigonometric polynomial and compares the fit error with the worst-case
interpolation bound and the shot-count formula.

    python demos/response_inference.py
"""

import math

import numpy as np

from sensebench import NoiseSpec, make_source
from sensebench.inference import (
    infer_response,
    inference_error_bound,
    max_grid_error,
    node_errors,
    shots_per_node_plain,
)

n = 5
src = make_source(n, NoiseSpec.global_depolarizing(0.1))
rng = np.random.default_rng(3)

print(f"n={n}: {2 * n + 1} nodes, true a_{n} = {math.exp(-0.1):.5f}")
print(f"{'N_I':>9} {'a_n fit':>9} {'max err':>9} {'eps':>9} {'5 eps ln n':>11}")
for budget in (2_000, 20_000, 200_000, 2_000_000):
    inf = infer_response(src, n, budget, rng)
    err = max_grid_error(inf.poly, src)
    eps = float(node_errors(inf, src).max())
    print(f"{budget:>9} {inf.poly.a[-1]:>9.5f} {err:>9.2e} {eps:>9.2e} {inference_error_bound(eps, n):>11.2e}")

# median error over repeated fits falls as 1/sqrt(N_I)
for budget in (10**3, 10**5):
    med = np.median([max_grid_error(infer_response(src, n, budget, rng).poly, src) for _ in range(200)])
    print(f"median max error at N_I={budget:>6}: {med:.2e}")

print(f"\nshots per node for error 0.1 everywhere w.p. 0.99 at n=10: {shots_per_node_plain(10, 0.1, 0.01)}")
