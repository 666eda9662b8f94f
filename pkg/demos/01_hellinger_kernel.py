"""
Hellinger kernels on sequences and on distributions
===================================================

Sequences become one-hot (indicator) distributions. The plain kernel sees
every pair of distinct sequences as equally far apart; a weighting built from
a small family of related sequences makes likely sequences look closer.
"""

import numpy as np

from corel import Alphabet, KernelParams, KernelSpec, gram_matrix
from corel.distributions import brute_force_hellinger_sq, hellinger_sq, indicators, random_distribution
from corel.priors import consensus_scale, profile_from_sequences, weighting_from_profile

alphabet = Alphabet.from_string("ACGT")
family = [alphabet.encode(s) for s in ["ACGTAC", "ACGTAA", "ACGAAC", "TCGTAC"]]
queries = [alphabet.encode(s) for s in ["ACGTAC", "ACGTTC", "GGGGGG", "TTTTTT"]]
X = indicators(queries, alphabet.size)

# %% plain kernel: off-diagonal entries are all theta * exp(-lambda)
plain = KernelSpec("plain-hellinger", params=KernelParams(theta=1.0, lam=1.0))
print("plain kernel\n", np.round(gram_matrix(plain, X), 4))

# %% weighted kernel: the profile of the family reshapes the geometry
profile = profile_from_sequences(family, alphabet.size)
w = weighting_from_profile(profile, consensus_scale(profile))
weighted = KernelSpec("weighted-hellinger", (w,), KernelParams(theta=1.0, lam=1.0))
print("weighted kernel\n", np.round(gram_matrix(weighted, X), 4))

# %% the O(L*A) product form agrees with summing over all A**L sequences
rng = np.random.default_rng(0)
p, q = random_distribution(6, 4, rng), random_distribution(6, 4, rng)
print("product form  ", hellinger_sq(p, q))
print("enumeration   ", brute_force_hellinger_sq(p, q))
