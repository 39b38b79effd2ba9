"""Shared independent oracles for the test suite.

These deliberately avoid the package's own recurrence code: normalized
associated Legendre values come from scipy's lpmv with log-factorial
normalization, so kernel and sampler checks are cross-implementation.
"""

import math

import numpy as np
from scipy.special import gammaln, lpmv


def oracle_pbar(m, k, x):
    logn = 0.5 * (
        math.log((2 * m + 1) / (4 * math.pi)) + gammaln(m - k + 1) - gammaln(m + k + 1)
    )
    return math.exp(logn) * lpmv(k, m, x)


def oracle_harmonic_columns(max_level, theta, phi):
    """All real orthonormal harmonics, level-major, k=0 then cos/sin pairs."""
    x = np.cos(theta)
    cols = []
    for m in range(1, max_level + 1):
        cols.append(oracle_pbar(m, 0, x))
        for k in range(1, m + 1):
            pk = oracle_pbar(m, k, x)
            cols.append(math.sqrt(2) * pk * np.cos(k * phi))
            cols.append(math.sqrt(2) * pk * np.sin(k * phi))
    return np.stack(cols, axis=-1)


def slow_sphere_field(weights_by_level, gaussians, theta, phi):
    """Reference evaluator: sum of per-level weight * draw * harmonic."""
    Y = oracle_harmonic_columns(len(weights_by_level), theta, phi)
    w = np.concatenate(
        [np.full(2 * m + 1, weights_by_level[m - 1]) for m in range(1, len(weights_by_level) + 1)]
    )
    return Y @ (w * gaussians)
