"""Empirical averages of node and triangle functions over a lineage.

Three index sets are supported: one generation ``G_q``, a subtree ``T_r``,
and the first ``n`` nodes of the tree reordered by a generation-preserving
permutation. Functions are applied to whole arrays at once, so ``f`` must be
vectorized (any numpy ufunc expression will do).

On incomplete data the mean is taken over the observed part of the index set
and the observed count is returned alongside it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySelection, IncompleteTree
from .lineage import Lineage
from .treekit import GenerationPermutation, generation_of, sizes

__all__ = [
    "Generation",
    "PermutedPrefix",
    "Subtree",
    "decompose_prefix_average",
    "decompose_subtree_average",
    "node_average",
    "selection",
    "triangle_average",
]


@dataclass(frozen=True)
class Generation:
    q: int

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("q must be >= 0")


@dataclass(frozen=True)
class Subtree:
    r: int

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be >= 0")


@dataclass(frozen=True)
class PermutedPrefix:
    n: int
    perm: GenerationPermutation

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")


AverageMode = Generation | Subtree | PermutedPrefix


def selection(mode) -> np.ndarray:
    """Node labels making up the index set of ``mode``."""
    if isinstance(mode, Generation):
        size, _ = sizes(mode.q, 0)
        return np.arange(size, 2 * size, dtype=np.int64)
    if isinstance(mode, Subtree):
        _, size = sizes(0, mode.r)
        return np.arange(1, size + 1, dtype=np.int64)
    if isinstance(mode, PermutedPrefix):
        return mode.perm.prefix(mode.n)
    raise TypeError(f"unknown averaging mode {mode!r}")


def _apply(f, *args) -> np.ndarray:
    out = np.asarray(f(*args), dtype=float)
    return np.broadcast_to(out, args[0].shape)


def node_average(lineage: Lineage, f, mode) -> tuple[float, int]:
    """Mean of ``f(X_i)`` over the observed nodes of the index set.

    Returns
    -------
    value : float
    count : int
        Number of observed nodes the mean was taken over.
    """
    x, ok = lineage.lookup(selection(mode))
    x = x[ok]
    if x.size == 0:
        raise EmptySelection(f"no observed node in {mode!r}")
    return float(np.mean(_apply(f, x))), int(x.size)


def triangle_average(lineage: Lineage, f, mode) -> tuple[float, int]:
    """Mean of ``f(X_i, X_2i, X_2i+1)`` over complete observed triangles."""
    idx = selection(mode)
    x, ok = lineage.lookup(idx)
    y, ok0 = lineage.lookup(2 * idx)
    z, ok1 = lineage.lookup(2 * idx + 1)
    keep = ok & ok0 & ok1
    if not keep.any():
        raise EmptySelection(f"no complete triangle in {mode!r}")
    vals = _apply(f, x[keep], y[keep], z[keep])
    return float(np.mean(vals)), int(keep.sum())


def _require_complete(lineage: Lineage, r: int) -> None:
    _, size = sizes(0, r)
    _, found = lineage.lookup(np.arange(1, size + 1, dtype=np.int64))
    if not found.all():
        raise IncompleteTree(f"T_{r} is not fully observed")


def decompose_subtree_average(lineage: Lineage, f, r: int) -> list[tuple[int, float, float]]:
    """Split the ``T_r`` mean into per-generation means.

    Returns ``[(q, |G_q| / |T_r|, mean over G_q), ...]`` for ``q = 0..r``; the
    weights sum to one and the weighted sum is the subtree mean.
    """
    _require_complete(lineage, r)
    _, total = sizes(0, r)
    out = []
    for q in range(r + 1):
        value, count = node_average(lineage, f, Generation(q))
        out.append((q, count / total, value))
    return out


def decompose_prefix_average(
    lineage: Lineage, f, n: int, perm: GenerationPermutation
) -> list[tuple[int, float, float]]:
    """Split a permuted-prefix mean into full generations plus the remainder.

    With ``r`` the generation of node ``n``, returns the full-generation terms
    ``(q, |G_q| / n, mean over G_q)`` for ``q < r`` followed by
    ``(r, (n - |T_{r-1}|) / n, mean of f over Pi(|T_{r-1}|+1..n))``.
    """
    r = generation_of(n)
    _require_complete(lineage, r)
    out = []
    for q in range(r):
        value, count = node_average(lineage, f, Generation(q))
        out.append((q, count / n, value))
    start = (1 << r) - 1
    tail = perm.prefix(n)[start:]
    x, _ = lineage.lookup(tail)
    out.append((r, tail.size / n, float(np.mean(_apply(f, x)))))
    return out
