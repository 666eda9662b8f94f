"""
Expected hypervolume improvement in two dimensions
==================================================

The exact cell decomposition against a Monte Carlo estimate, and how the
score trades off a candidate's mean against its uncertainty.
"""

import numpy as np

from corel.acquisition import ParetoState, ehvi_2d, ehvi_2d_mc, hypervolume_2d

front = np.array([[1.0, 4.0], [2.0, 3.0], [3.5, 1.5], [4.0, 0.5]])
state = ParetoState(np.zeros(2), front)
print("hypervolume of the front:", hypervolume_2d(front, state.ref_point))

rng = np.random.default_rng(0)
for mean, var in [((2.5, 2.5), (0.1, 0.1)), ((2.5, 2.5), (1.0, 1.0)), ((1.0, 1.0), (0.1, 0.1)), ((1.0, 1.0), (4.0, 4.0))]:
    exact = ehvi_2d(np.array(mean), np.array(var), state)
    est, se = ehvi_2d_mc(np.array(mean), np.array(var), state, 200_000, rng)
    print(f"mean={mean} var={var}: exact {exact:.4f}  MC {est:.4f} +- {se:.4f}")
