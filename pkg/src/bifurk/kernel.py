"""Bifurcating transition kernels and tree-indexed simulation.

A kernel maps a mother's state to the joint law of her two daughters. Any
object with an integer attribute ``n_uniforms`` and a vectorized method
``split(x, u) -> (y, z)`` works as a kernel: ``x`` holds mother states and
``u`` has shape ``(len(x), n_uniforms)`` with i.i.d. uniforms on (0, 1).
Root distributions follow the same convention through ``sample(u)``.

Exact second-moment computations are only offered for :class:`FiniteKernel`.
The limit theorems these support assume the usual function-class conditions
(constants included, closed under squares and under ``P(f (x) g)``, uniform
ergodic domination by ``Q``, integrability under the root law). Those cannot be
checked mechanically for arbitrary ``f`` and are taken as caller assumptions.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from .errors import InvalidDistribution
from .lineage import Lineage
from .rng import CounterRNG, box_muller
from .treekit import sizes

__all__ = [
    "Categorical",
    "Dirac",
    "FiniteKernel",
    "Gaussian",
    "KernelSpec",
    "RootDistribution",
    "exact_gen_second_moment",
    "induced_step",
    "iterate_q",
    "simulate_tmc",
    "stationary_distribution",
]

SPLIT_STREAM = 0
ROOT_STREAM = 1


class KernelSpec(Protocol):
    n_uniforms: int

    def split(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


class RootDistribution(Protocol):
    n_uniforms: int

    def sample(self, u: np.ndarray) -> np.ndarray: ...


class Dirac:
    n_uniforms = 0

    def __init__(self, x: float):
        self.x = float(x)

    def sample(self, u):
        return np.full(len(u), self.x)

    def __repr__(self):
        return f"Dirac({self.x})"


class Gaussian:
    n_uniforms = 2

    def __init__(self, mean: float, var: float):
        if var < 0:
            raise InvalidDistribution("variance must be >= 0")
        self.mean, self.var = float(mean), float(var)

    def sample(self, u):
        return self.mean + np.sqrt(self.var) * box_muller(u[:, :2])[:, 0]

    def __repr__(self):
        return f"Gaussian({self.mean}, {self.var})"


class Categorical:
    """Distribution on finitely many numeric states."""

    n_uniforms = 1

    def __init__(self, states, probs):
        self.states = np.asarray(states, dtype=float)
        self.probs = _check_probability_vector(probs, self.states.size)

    def sample(self, u):
        cdf = np.cumsum(self.probs)
        idx = np.searchsorted(cdf, u[:, 0], side="right").clip(max=self.states.size - 1)
        return self.states[idx]

    def __repr__(self):
        return f"Categorical({self.states.tolist()}, {self.probs.tolist()})"


def _check_probability_vector(p, size=None, tol=1e-12):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (size is not None and p.size != size):
        raise InvalidDistribution(f"expected a probability vector of length {size}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > tol:
        raise InvalidDistribution("probabilities must be >= 0 and sum to 1")
    return p


class FiniteKernel:
    """A bifurcating kernel on a finite, numerically labelled state space.

    ``table[x, y, z]`` is the probability that a mother in state ``x`` has
    daughters ``(y, z)`` (type 0 first).
    """

    n_uniforms = 1

    def __init__(self, table, states=None):
        table = np.asarray(table, dtype=float)
        m = table.shape[0]
        if table.shape == (m, m * m):
            table = table.reshape(m, m, m)
        if table.shape != (m, m, m):
            raise InvalidDistribution("table must have shape (m, m, m) or (m, m*m)")
        if np.any(table < 0):
            raise InvalidDistribution("kernel probabilities must be >= 0")
        rows = table.reshape(m, -1).sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-12):
            raise InvalidDistribution("each row of the kernel must sum to 1")
        if states is None:
            states = np.arange(m, dtype=float)
        states = np.asarray(states, dtype=float)
        if states.shape != (m,) or np.any(np.diff(states) <= 0):
            raise ValueError("states must be strictly increasing numbers, one per row")
        self.table = table
        self.states = states
        self._cdf = np.cumsum(table.reshape(m, -1), axis=1)

    def __repr__(self):
        return f"FiniteKernel({self.table.tolist()}, states={self.states.tolist()})"

    @property
    def size(self) -> int:
        return self.states.size

    @property
    def P0(self) -> np.ndarray:
        return self.table.sum(axis=2)

    @property
    def P1(self) -> np.ndarray:
        return self.table.sum(axis=1)

    @property
    def Q(self) -> np.ndarray:
        """Transition matrix of the induced single-lineage chain."""
        return 0.5 * (self.P0 + self.P1)

    def index_of(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.states, x).clip(max=self.size - 1)
        if np.any(self.states[idx] != x):
            raise ValueError("value outside the kernel's state space")
        return idx

    def split(self, x, u):
        idx = self.index_of(x)
        m = self.size
        cell = (u[:, :1] >= self._cdf[idx]).sum(axis=1).clip(max=m * m - 1)
        return self.states[cell // m], self.states[cell % m]

    def pair_expectation(self, g, h=None) -> np.ndarray:
        """Vector ``x -> sum_{y,z} P(x, y, z) g(y) h(z)``."""
        g = np.asarray(g, dtype=float)
        h = g if h is None else np.asarray(h, dtype=float)
        return np.einsum("xyz,y,z->x", self.table, g, h)

    @classmethod
    def from_deterministic(cls, daughters, states=None) -> FiniteKernel:
        """Kernel where state index ``k`` always splits into ``daughters[k]``."""
        m = len(daughters)
        table = np.zeros((m, m, m))
        for x, (y, z) in enumerate(daughters):
            table[x, y, z] = 1.0
        return cls(table, states)

    @classmethod
    def swap(cls) -> FiniteKernel:
        """Two states; 0 splits into (1, 1) and 1 into (0, 0)."""
        return cls.from_deterministic([(1, 1), (0, 0)])

    @classmethod
    def constant_pair(cls) -> FiniteKernel:
        """Two states; every mother has daughters (1, 0)."""
        return cls.from_deterministic([(1, 0), (1, 0)])

    @classmethod
    def random(cls, m: int, rng: np.random.Generator, states=None) -> FiniteKernel:
        """Strictly positive kernel with Dirichlet(1) rows."""
        table = rng.dirichlet(np.ones(m * m), size=m)
        return cls(table / table.sum(axis=1, keepdims=True), states)


def simulate_tmc(kernel: KernelSpec, root_dist: RootDistribution, depth: int, seed: int) -> Lineage:
    """Simulate a complete ``T_depth`` of a bifurcating Markov chain.

    Generation ``q + 1`` is filled in one vectorized call over the ``2**q``
    mothers. Every mother reads its own counter stream, keyed by ``seed`` and
    her label, so the output is independent of evaluation order.
    """
    _, n = sizes(0, depth)
    rng = CounterRNG(seed)
    values = np.empty(n)
    u_root = rng.uniforms([1], root_dist.n_uniforms, stream=ROOT_STREAM)
    values[0] = root_dist.sample(u_root)[0]
    for q in range(depth):
        mothers = np.arange(1 << q, 2 << q, dtype=np.int64)
        u = rng.uniforms(mothers, kernel.n_uniforms, stream=SPLIT_STREAM)
        y, z = kernel.split(values[mothers - 1], u)
        values[2 * mothers - 1] = y
        values[2 * mothers] = z
    return Lineage.from_dense(values)


def induced_step(kernel: KernelSpec, x, rng: np.random.Generator) -> np.ndarray:
    """One step of the induced chain: split, then keep a fair-coin daughter."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = rng.random((x.size, kernel.n_uniforms))
    coin = rng.random(x.size) < 0.5
    y, z = kernel.split(x, u)
    return np.where(coin, z, y)


def iterate_q(kernel: FiniteKernel, f, k: int) -> np.ndarray:
    """Return ``Q^k f`` as a vector over states."""
    if k < 0:
        raise ValueError("k must be >= 0")
    out = np.asarray(f, dtype=float).copy()
    Q = kernel.Q
    for _ in range(k):
        out = Q @ out
    return out


def exact_gen_second_moment(kernel: FiniteKernel, nu, f, q: int) -> float:
    """Exact ``E[(mean of f over generation q)^2]``.

    Two uniform nodes of ``G_q`` coincide with probability ``2**-q`` and
    otherwise branch apart in generation ``p < q`` with probability
    ``2**-(p+1)``. Given the split at ``p``, the two descendants are
    independent copies of the induced chain started from the daughter pair.
    """
    nu = _check_probability_vector(nu, kernel.size)
    f = np.asarray(f, dtype=float)
    if f.shape != (kernel.size,):
        raise ValueError("f must give one value per state")
    if q < 0:
        raise ValueError("q must be >= 0")
    Q = kernel.Q
    # nu Q^p for p = 0..q
    laws = [nu]
    for _ in range(q):
        laws.append(laws[-1] @ Q)
    total = 2.0**-q * float(laws[q] @ (f * f))
    g = f.copy()  # Q^(q-p-1) f, built from p = q-1 downward
    for p in range(q - 1, -1, -1):
        total += 2.0 ** -(p + 1) * float(laws[p] @ kernel.pair_expectation(g))
        g = Q @ g
    return total


def stationary_distribution(kernel: FiniteKernel) -> np.ndarray:
    """Unique invariant law of the induced chain ``Q``."""
    m = kernel.size
    A = np.vstack([kernel.Q.T - np.eye(m), np.ones((1, m))])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    mu, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < m:
        raise InvalidDistribution("induced chain has no unique stationary law")
    mu = np.clip(mu, 0.0, None)
    return mu / mu.sum()
