"""Integer arithmetic on the regular binary tree.

Nodes are positive integers. The root is 1 and the daughters of ``n`` are
``2n`` (type 0, new pole) and ``2n + 1`` (type 1, old pole). Generation ``q``
is the block ``[2**q, 2**(q+1))`` and the subtree ``T_r`` is the union of
generations ``0..r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RootHasNoMother, TreeOverflow

MAX_NODE = 2**63 - 1
MAX_GENERATION = 62

__all__ = [
    "MAX_NODE",
    "MAX_GENERATION",
    "GenerationPermutation",
    "generation_of",
    "generation_range",
    "generations_array",
    "mother",
    "mrca",
    "path_from_root",
    "sample_permutation",
    "sizes",
    "subtree_range",
]


def _check_node(n: int) -> int:
    n = int(n)
    if n < 1:
        raise ValueError(f"node labels are positive integers, got {n}")
    if n > MAX_NODE:
        raise TreeOverflow(f"node label {n} exceeds 2**63 - 1")
    return n


def generation_of(n: int) -> int:
    """Return ``floor(log2 n)``, the generation holding node ``n``."""
    return _check_node(n).bit_length() - 1


def mother(n: int) -> int:
    n = _check_node(n)
    if n == 1:
        raise RootHasNoMother("the root has no mother")
    return n >> 1


def path_from_root(n: int) -> tuple[int, ...]:
    """Daughter choices leading from the root to ``n``.

    Following ``m -> 2m + z`` for each ``z`` of the result, starting at 1,
    reaches ``n``. The path to 25 is ``(1, 0, 0, 1)``.
    """
    n = _check_node(n)
    q = n.bit_length() - 1
    return tuple((n >> (q - 1 - k)) & 1 for k in range(q))


def mrca(i: int, j: int) -> int:
    """Most recent common ancestor of ``i`` and ``j``."""
    i, j = _check_node(i), _check_node(j)
    gi, gj = i.bit_length(), j.bit_length()
    if gi > gj:
        i >>= gi - gj
    elif gj > gi:
        j >>= gj - gi
    while i != j:
        i >>= 1
        j >>= 1
    return i


def sizes(q: int, r: int) -> tuple[int, int]:
    """Return ``(|G_q|, |T_r|) = (2**q, 2**(r+1) - 1)``."""
    if q < 0 or r < 0:
        raise ValueError("generations are non-negative")
    if q > MAX_GENERATION or r > MAX_GENERATION:
        raise TreeOverflow(f"generation too deep for 64-bit counts (q={q}, r={r})")
    return 1 << q, (1 << (r + 1)) - 1


def generation_range(q: int) -> range:
    size, _ = sizes(q, 0)
    return range(size, 2 * size)


def subtree_range(r: int) -> range:
    _, size = sizes(0, r)
    return range(1, size + 1)


@dataclass(frozen=True)
class GenerationPermutation:
    """A permutation of the tree that maps every generation onto itself.

    ``per_generation[q][k]`` is the image of node ``2**q + k``.
    """

    per_generation: tuple[np.ndarray, ...]
    seed: int | None = None

    @property
    def max_generation(self) -> int:
        return len(self.per_generation) - 1

    def __call__(self, i):
        """Image of node(s) ``i``; accepts an int or an integer array."""
        if np.isscalar(i):
            q = generation_of(i)
            self._check_depth(q)
            return int(self.per_generation[q][int(i) - (1 << q)])
        i = np.asarray(i, dtype=np.int64)
        out = np.empty_like(i)
        gens = generations_array(i)
        for q in np.unique(gens):
            self._check_depth(int(q))
            sel = gens == q
            out[sel] = self.per_generation[q][i[sel] - (1 << int(q))]
        return out

    def prefix(self, n: int) -> np.ndarray:
        """Return ``(Pi(1), ..., Pi(n))``."""
        n = int(n)
        if n < 1:
            raise ValueError("prefix length must be >= 1")
        q_last = generation_of(n)
        self._check_depth(q_last)
        parts = list(self.per_generation[:q_last])
        parts.append(self.per_generation[q_last][: n - (1 << q_last) + 1])
        return np.concatenate(parts)

    def inverse(self) -> GenerationPermutation:
        inv = []
        for q, image in enumerate(self.per_generation):
            base = 1 << q
            arr = np.empty_like(image)
            arr[image - base] = np.arange(base, 2 * base, dtype=np.int64)
            inv.append(arr)
        return GenerationPermutation(tuple(inv), self.seed)

    def _check_depth(self, q: int) -> None:
        if q > self.max_generation:
            raise ValueError(
                f"permutation only covers generations 0..{self.max_generation}, asked {q}"
            )


def generations_array(ids: np.ndarray) -> np.ndarray:
    """Vectorized ``floor(log2 n)`` that stays exact for int64 labels."""
    ids = np.asarray(ids, dtype=np.int64)
    out = np.zeros(ids.shape, dtype=np.int64)
    work = ids.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        big = work >= (np.int64(1) << shift)
        out[big] += shift
        work[big] >>= shift
    return out


def sample_permutation(max_generation: int, seed: int) -> GenerationPermutation:
    """Independent uniform shuffles of generations ``0..max_generation``."""
    if max_generation < 0:
        raise ValueError("max_generation must be >= 0")
    sizes(max_generation, 0)
    rng = np.random.default_rng(seed)
    gens = []
    for q in range(max_generation + 1):
        block = np.arange(1 << q, 2 << q, dtype=np.int64)
        rng.shuffle(block)
        gens.append(block)
    return GenerationPermutation(tuple(gens), seed)
