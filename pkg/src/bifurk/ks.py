"""One-sample Kolmogorov-Smirnov tests with the asymptotic p-value."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

__all__ = ["kolmogorov_sf", "ks_normal", "ks_statistic", "ks_uniform"]

_TOL = 1e-10


def kolmogorov_sf(x: float) -> float:
    """``P(K > x)`` for the Kolmogorov limit law of ``sqrt(n) D_n``.

    Uses the alternating series ``2 sum (-1)**(k-1) exp(-2 k**2 x**2)`` for
    ``x >= 1`` and the Jacobi theta form of the cdf below that, where the
    alternating series converges slowly. Both are summed until the next
    term drops below 1e-10.
    """
    if x <= 0:
        return 1.0
    if x >= 1.0:
        total, k = 0.0, 1
        while True:
            term = math.exp(-2.0 * k * k * x * x)
            total += term if k % 2 else -term
            if term < _TOL:
                break
            k += 1
        return min(1.0, max(0.0, 2.0 * total))
    c = math.pi**2 / (8.0 * x * x)
    cdf, k = 0.0, 1
    while True:
        term = math.exp(-((2 * k - 1) ** 2) * c)
        cdf += term
        if term < _TOL * max(cdf, 1e-300) or term == 0.0:
            break
        k += 1
    cdf *= math.sqrt(2.0 * math.pi) / x
    return min(1.0, max(0.0, 1.0 - cdf))


def ks_statistic(sample, cdf) -> float:
    """Two-sided ``sup |F_n - F|`` for a vectorized continuous ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _test(sample, cdf) -> tuple[float, float]:
    d = ks_statistic(sample, cdf)
    n = np.asarray(sample).size
    return d, kolmogorov_sf(math.sqrt(n) * d)


def ks_uniform(sample) -> tuple[float, float]:
    """KS distance to Uniform[0, 1] and its asymptotic p-value."""
    return _test(sample, lambda x: np.clip(x, 0.0, 1.0))


def ks_normal(sample) -> tuple[float, float]:
    """KS distance to N(0, 1) and its asymptotic p-value."""
    return _test(sample, ndtr)
