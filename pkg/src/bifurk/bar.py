"""Bifurcating autoregressive model of order one.

Each mother value ``x`` produces a new-pole daughter ``alpha0 x + beta0 + e0``
and an old-pole daughter ``alpha1 x + beta1 + e1``, with ``(e0, e1)`` centered
Gaussian, common variance ``sigma2`` and correlation ``rho``.

Only Gaussian noise is implemented. A non-Gaussian i.i.d. noise pair with the
same covariance would slot in by replacing :meth:`BarKernel.split`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameters
from .kernel import Dirac, Gaussian, simulate_tmc
from .lineage import Lineage
from .rng import box_muller

__all__ = [
    "BarKernel",
    "BarParams",
    "Stationary",
    "StationaryMoments",
    "bar_step",
    "induced_ar1_step",
    "moments_from_theta",
    "noise_pair",
    "sample_stationary",
    "simulate_bar",
    "stationary_moments",
    "truncation_length",
]


@dataclass(frozen=True)
class BarParams:
    alpha0: float
    beta0: float
    alpha1: float
    beta1: float
    sigma2: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        for name in ("alpha0", "beta0", "alpha1", "beta1", "sigma2", "rho"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameters(f"{name} must be finite")
        if not (abs(self.alpha0) < 1 and abs(self.alpha1) < 1):
            raise InvalidParameters("alpha0 and alpha1 must lie in (-1, 1)")
        if not self.sigma2 > 0:
            raise InvalidParameters("sigma2 must be > 0")
        if not abs(self.rho) < 1:
            raise InvalidParameters("rho must lie in (-1, 1)")
        if not stationary_moments(self).variance > 0:
            raise InvalidParameters("stationary variance is not positive")

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.alpha0, self.beta0, self.alpha1, self.beta1])

    @classmethod
    def from_theta(cls, theta, sigma2=1.0, rho=0.0) -> BarParams:
        a0, b0, a1, b1 = (float(t) for t in theta)
        return cls(a0, b0, a1, b1, float(sigma2), float(rho))

    @property
    def fixed_points(self) -> tuple[float, float]:
        return (self.beta0 / (1 - self.alpha0), self.beta1 / (1 - self.alpha1))

    def swapped(self) -> BarParams:
        return BarParams(self.alpha1, self.beta1, self.alpha0, self.beta0, self.sigma2, self.rho)

    def noise_factor(self) -> np.ndarray:
        """Lower Cholesky factor of the noise covariance."""
        s = math.sqrt(self.sigma2)
        return s * np.array([[1.0, 0.0], [self.rho, math.sqrt(1 - self.rho**2)]])


@dataclass(frozen=True)
class StationaryMoments:
    mu1: float
    mu2: float
    variance: float = None

    def __post_init__(self):
        if self.variance is None:
            object.__setattr__(self, "variance", self.mu2 - self.mu1**2)


def moments_from_theta(alpha0, beta0, alpha1, beta1, sigma2) -> StationaryMoments:
    """First two moments of the induced chain's stationary law.

    From ``Z = a Z + b + e`` in law, with ``(a, b)`` uniform over the two
    branches, ``mu1 = mean(beta) / (1 - mean(alpha))`` and

        var = (sigma2 + ((alpha0 - alpha1) mu1 + beta0 - beta1)**2 / 4)
              / (1 - mean(alpha**2))

    which is ``mu2 - mu1**2`` without the cancellation; ``mu2 = var + mu1**2``.

    No validation: estimates give a finite answer whenever
    ``mean(alpha**2) < 1`` and ``mean(alpha) != 1``.
    """
    a = 0.5 * (alpha0 + alpha1)
    b = 0.5 * (beta0 + beta1)
    aa = 0.5 * (alpha0 * alpha0 + alpha1 * alpha1)
    mu1 = b / (1 - a)
    spread = 0.5 * ((alpha0 - alpha1) * mu1 + beta0 - beta1)
    var = (sigma2 + spread * spread) / (1 - aa)
    return StationaryMoments(mu1, var + mu1 * mu1, var)


def stationary_moments(params: BarParams) -> StationaryMoments:
    p = params
    return moments_from_theta(p.alpha0, p.beta0, p.alpha1, p.beta1, p.sigma2)


def _correlate(params: BarParams, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = math.sqrt(params.sigma2)
    e0 = s * g[..., 0]
    e1 = s * (params.rho * g[..., 0] + math.sqrt(1 - params.rho**2) * g[..., 1])
    return e0, e1


def noise_pair(params: BarParams, rng: np.random.Generator, size=None):
    """Draw ``(e0, e1)`` with covariance ``sigma2 [[1, rho], [rho, 1]]``."""
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    g = rng.standard_normal(shape + (2,))
    return _correlate(params, g)


def bar_step(params: BarParams, x, rng: np.random.Generator):
    """Daughter pair(s) of mother value(s) ``x``."""
    x = np.asarray(x, dtype=float)
    e0, e1 = noise_pair(params, rng, x.shape if x.ndim else None)
    p = params
    return p.alpha0 * x + p.beta0 + e0, p.alpha1 * x + p.beta1 + e1


class BarKernel:
    """The model as a kernel for :func:`bifurk.kernel.simulate_tmc`."""

    n_uniforms = 2

    def __init__(self, params: BarParams):
        self.params = params

    def split(self, x, u):
        e0, e1 = _correlate(self.params, box_muller(u))
        p = self.params
        return p.alpha0 * x + p.beta0 + e0, p.alpha1 * x + p.beta1 + e1


def truncation_length(params: BarParams) -> int:
    """Terms kept in the stationary series so the tail is below 1e-12.

    Smallest ``K >= 1`` with
    ``max|alpha|**K * (|beta0| + |beta1| + 6 sigma + 1) < 1e-12``.
    """
    a = max(abs(params.alpha0), abs(params.alpha1))
    if a == 0:
        return 1
    envelope = abs(params.beta0) + abs(params.beta1) + 6 * math.sqrt(params.sigma2) + 1
    k = math.ceil(math.log(1e-12 / envelope) / math.log(a))
    while a**k * envelope >= 1e-12:
        k += 1
    return max(k, 1)


def _stationary_series(params: BarParams, coins: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Sum ``a_1 ... a_{k-1} b_k`` over the last axis.

    ``coins`` picks the branch of each factor and ``eps`` holds the
    ``N(0, sigma2)`` innovations, both shaped ``(m, K)``.
    """
    p = params
    a = np.where(coins, p.alpha1, p.alpha0)
    b = np.where(coins, p.beta1, p.beta0) + eps
    total = np.zeros(coins.shape[0])
    prod = np.ones(coins.shape[0])
    for k in range(coins.shape[1]):
        total += prod * b[:, k]
        prod = prod * a[:, k]
    return total


def sample_stationary(params: BarParams, rng: np.random.Generator, size=None):
    """Draw from the stationary law of the induced chain."""
    n = 1 if size is None else int(size)
    K = truncation_length(params)
    out = np.empty(n)
    chunk = max(1, 2**22 // K)
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        coins = rng.random((m, K)) < 0.5
        eps = math.sqrt(params.sigma2) * rng.standard_normal((m, K))
        out[start : start + m] = _stationary_series(params, coins, eps)
    return out[0] if size is None else out


class Stationary:
    """Root distribution equal to the induced chain's stationary law."""

    def __init__(self, params: BarParams):
        self.params = params
        self.K = truncation_length(params)
        self.n_uniforms = 2 * self.K + self.K % 2

    def sample(self, u):
        K = self.K
        coins = u[:, :K] < 0.5
        g = box_muller(u[:, K : K + 2 * ((K + 1) // 2)])[:, :K]
        return _stationary_series(self.params, coins, math.sqrt(self.params.sigma2) * g)

    def __repr__(self):
        return f"Stationary({self.params})"


def induced_ar1_step(params: BarParams, y, rng: np.random.Generator):
    """``Y' = a Y + b`` with ``(a, b)`` picked by a fair coin, plus noise."""
    y = np.asarray(y, dtype=float)
    coin = rng.random(y.shape) < 0.5
    eps = math.sqrt(params.sigma2) * rng.standard_normal(y.shape)
    p = params
    return np.where(coin, p.alpha1, p.alpha0) * y + np.where(coin, p.beta1, p.beta0) + eps


def simulate_bar(params: BarParams, depth: int, seed: int, root=None) -> Lineage:
    """Simulate a complete ``T_depth``; the root defaults to the stationary law."""
    if root is None:
        root = Stationary(params)
    return simulate_tmc(BarKernel(params), root, depth, seed)


def make_root(params: BarParams, kind: str = "stationary", args=()) -> object:
    """Root distribution from a config-style ``kind`` plus positional args."""
    if kind == "stationary":
        return Stationary(params)
    if kind == "dirac":
        (x,) = args
        return Dirac(x)
    if kind == "gaussian":
        m, v = args
        return Gaussian(m, v)
    raise InvalidParameters(f"unknown root kind {kind!r}")
