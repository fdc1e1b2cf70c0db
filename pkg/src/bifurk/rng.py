"""Counter-based random streams, one per tree node.

Each draw is a pure function of ``(seed, node, block, stream)`` computed by
the Philox4x32-10 bijection, so a tree generation can be filled in any order
(or in parallel) and still produce identical values.
"""

from __future__ import annotations

import numpy as np

__all__ = ["CounterRNG", "derive_seed", "philox4x32"]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)


def philox4x32(counter, key, rounds=10):
    """Philox4x32 on arrays of counters.

    Parameters
    ----------
    counter : sequence of 4 uint32 arrays (broadcastable)
    key : pair of ints below 2**32

    Returns
    -------
    tuple of four uint64 arrays holding 32-bit words
    """
    c0, c1, c2, c3 = np.broadcast_arrays(
        *[np.asarray(c, dtype=np.uint64) & _MASK for c in counter]
    )
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for rnd in range(rounds):
        if rnd:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = c0 * _M0
        p1 = c2 * _M1
        hi0, lo0 = p0 >> _SHIFT, p0 & _MASK
        hi1, lo1 = p1 >> _SHIFT, p1 & _MASK
        c0, c1, c2, c3 = (
            hi1 ^ c1 ^ np.uint64(k0),
            lo1,
            hi0 ^ c3 ^ np.uint64(k1),
            lo0,
        )
    return c0, c1, c2, c3


def _to_unit(hi, lo):
    # 53 random bits, shifted by half an ulp so 0 and 1 are never produced
    bits = ((hi >> np.uint64(5)) << np.uint64(26)) | (lo >> np.uint64(6))
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


def derive_seed(*parts: int) -> int:
    """Hash integers into a 64-bit seed (used for replication streams)."""
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])


class CounterRNG:
    """Uniform and normal draws addressed by node label.

    ``uniforms(ids, k)`` returns a ``(len(ids), k)`` array whose row for node
    ``n`` depends only on ``(seed, n, stream)``.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self._key = (seed & 0xFFFFFFFF, seed >> 32)

    def uniforms(self, ids, k: int, stream: int = 0) -> np.ndarray:
        ids = np.atleast_1d(np.asarray(ids, dtype=np.int64)).astype(np.uint64)
        nblocks = (k + 1) // 2
        out = np.empty((ids.size, 2 * nblocks))
        lo_id = ids & _MASK
        hi_id = ids >> _SHIFT
        for b in range(nblocks):
            w0, w1, w2, w3 = philox4x32((lo_id, hi_id, b, stream), self._key)
            out[:, 2 * b] = _to_unit(w0, w1)
            out[:, 2 * b + 1] = _to_unit(w2, w3)
        return out[:, :k]

    def normals(self, ids, k: int, stream: int = 0) -> np.ndarray:
        """Standard normals by Box-Muller on the node's uniform stream."""
        m = (k + 1) // 2
        u = self.uniforms(ids, 2 * m, stream)
        return box_muller(u)[:, :k]


def box_muller(u: np.ndarray) -> np.ndarray:
    """Map ``(..., 2m)`` uniforms in (0, 1) to ``(..., 2m)`` standard normals."""
    u1, u2 = u[..., 0::2], u[..., 1::2]
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    out = np.empty(u.shape)
    out[..., 0::2] = rad * np.cos(ang)
    out[..., 1::2] = rad * np.sin(ang)
    return out
