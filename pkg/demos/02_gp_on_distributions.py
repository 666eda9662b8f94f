"""
Gaussian-process regression over factorized distributions
=========================================================

Under the plain kernel every pair of distinct sequences is at Hellinger
distance 1, so a GP trained on sequences alone cannot tell near from far.
Between soft distributions the distance is graded. Here the GP learns the
relaxed objective (the expectation of f under p) from random distributions
and then predicts it at unseen ones.
"""

import numpy as np

from corel import KernelSpec, fit
from corel.blackbox import exhaustive_values, weighted_hamming_landscape
from corel.distributions import indicators, random_distribution, relaxed_objective

L, A = 5, 3
bb = weighted_hamming_landscape((0, 1, 2, 0, 1), A, [1, 2, 3, 2, 1])
X, Y = exhaustive_values(bb)
table = {tuple(int(t) for t in x): float(v) for x, v in zip(X, Y[:, 0])}

rng = np.random.default_rng(1)
train = np.stack([random_distribution(L, A, rng, 0.5) for _ in range(40)])
y = np.array([relaxed_objective(table, p) for p in train])
model = fit(train, y, KernelSpec())
print(f"mu={model.mu:.3f} theta={model.theta:.3f} lambda={model.lam:.3g} sigma^2={model.sigma_sq:.3g}")

# %% held-out distributions
test = np.stack([random_distribution(L, A, rng, 0.5) for _ in range(200)])
truth = np.array([relaxed_objective(table, p) for p in test])
mean, var = model.posterior(test)
print("held-out correlation:", np.corrcoef(mean, truth)[0, 1].round(3))
print("held-out RMSE:", np.sqrt(np.mean((mean - truth) ** 2)).round(3), " spread of truth:", truth.std().round(3))

# %% vertices are the sequences themselves
mean, var = model.posterior(indicators([(0, 1, 2, 0, 1), (2, 2, 0, 1, 0)], A))
print("optimum and a far sequence:", mean.round(2), "true", bb.evaluate_batch([(0, 1, 2, 0, 1), (2, 2, 0, 1, 0)])[:, 0])
