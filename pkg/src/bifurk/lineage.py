"""Observed values on (a subset of) the binary tree."""

from __future__ import annotations

import numpy as np

from .treekit import MAX_GENERATION, MAX_NODE, generations_array

__all__ = ["Lineage"]

_MAX_MOTHER = (MAX_NODE - 1) // 2


class Lineage:
    """Sparse map from node label to value.

    Labels are kept sorted so lookups are vectorized binary searches. A
    lineage built by simulation covers a complete ``T_r``; one read from a
    file may be any subset of the tree.
    """

    __slots__ = ("ids", "values", "_complete_depth")

    def __init__(self, ids, values, *, _complete_depth=None):
        ids = np.asarray(ids, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        if ids.shape != values.shape:
            raise ValueError("ids and values must have the same length")
        if ids.size and ids.min() < 1:
            raise ValueError("node labels must be >= 1")
        order = np.argsort(ids, kind="stable")
        ids, values = ids[order], values[order]
        if ids.size > 1 and np.any(ids[1:] == ids[:-1]):
            raise ValueError("duplicate node labels")
        ids.setflags(write=False)
        values.setflags(write=False)
        self.ids = ids
        self.values = values
        if _complete_depth is None:
            _complete_depth = _detect_depth(ids)
        self._complete_depth = _complete_depth

    @classmethod
    def from_dense(cls, values) -> Lineage:
        """Build a complete ``T_r`` from ``values[k] = X_{k+1}``."""
        values = np.asarray(values, dtype=np.float64)
        n = values.size
        depth = n.bit_length() - 1
        if n < 1 or n != (1 << (depth + 1)) - 1:
            raise ValueError("dense lineage needs 2**(r+1) - 1 values")
        return cls(np.arange(1, n + 1), values, _complete_depth=depth)

    @classmethod
    def from_mapping(cls, mapping) -> Lineage:
        keys = list(mapping)
        return cls(np.array(keys, dtype=np.int64), np.array([mapping[k] for k in keys]))

    def __len__(self) -> int:
        return int(self.ids.size)

    def __repr__(self) -> str:
        extra = f", depth={self.depth}" if self.depth is not None else ""
        return f"Lineage(n={len(self)}{extra})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Lineage):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(
            self.values, other.values
        )

    @property
    def depth(self) -> int | None:
        """``r`` if the observed labels are exactly ``T_r``, else None."""
        return self._complete_depth

    @property
    def max_index(self) -> int:
        return int(self.ids[-1]) if self.ids.size else 0

    def dense(self) -> np.ndarray:
        if self.depth is None:
            raise ValueError("lineage is not a complete subtree")
        return self.values

    def lookup(self, ids) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(values, observed_mask)``; unobserved values are NaN."""
        ids = np.asarray(ids, dtype=np.int64)
        if self.ids.size == 0:
            return np.full(ids.shape, np.nan), np.zeros(ids.shape, dtype=bool)
        if self.depth is not None:
            found = (ids >= 1) & (ids <= self.ids.size)
            pos = np.where(found, ids - 1, 0)
        else:
            pos = np.searchsorted(self.ids, ids).clip(max=self.ids.size - 1)
            found = self.ids[pos] == ids
        return np.where(found, self.values[pos], np.nan), found

    def __getitem__(self, n: int) -> float:
        vals, found = self.lookup(np.array([n]))
        if not found[0]:
            raise KeyError(n)
        return float(vals[0])

    def __contains__(self, n) -> bool:
        return bool(self.lookup(np.array([n]))[1][0])

    def pairs(self, branch: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Observed ``(i, X_i, X_{2i+branch})`` with both ends present."""
        mothers = self.ids[self.ids <= _MAX_MOTHER]
        xm = self.values[: mothers.size]
        yd, ok = self.lookup(2 * mothers + branch)
        return mothers[ok], xm[ok], yd[ok]

    def triangles(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Observed complete triangles ``(i, X_i, X_2i, X_2i+1)`` in label order."""
        mothers = self.ids[self.ids <= _MAX_MOTHER]
        xm = self.values[: mothers.size]
        y, ok0 = self.lookup(2 * mothers)
        z, ok1 = self.lookup(2 * mothers + 1)
        ok = ok0 & ok1
        return mothers[ok], xm[ok], y[ok], z[ok]

    def map_values(self, fn) -> Lineage:
        return Lineage(self.ids, fn(self.values), _complete_depth=self.depth)

    def swap_branches(self) -> Lineage:
        """Mirror the tree so every type-0 daughter becomes type 1.

        Node ``n`` in generation ``q`` moves to ``n ^ (2**q - 1)``; mother
        links are preserved and each sister pair trades places.
        """
        gens = generations_array(self.ids)
        mirrored = self.ids ^ ((np.int64(1) << gens) - 1)
        return Lineage(mirrored, self.values, _complete_depth=self.depth)

    def to_dict(self) -> dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.ids, self.values)}


def _detect_depth(ids: np.ndarray) -> int | None:
    n = ids.size
    if n == 0:
        return None
    depth = n.bit_length() - 1
    if n != (1 << (depth + 1)) - 1 or depth > MAX_GENERATION:
        return None
    if ids[0] == 1 and ids[-1] == n:
        return depth
    return None
