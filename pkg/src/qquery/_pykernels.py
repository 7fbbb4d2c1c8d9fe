"""Numpy versions of the compiled kernels, used when the extension is not built."""

from __future__ import annotations

import numpy as np


def fwht_inplace(a: np.ndarray) -> None:
    size = a.shape[0]
    h = 1
    while h < size:
        v = a.reshape(-1, 2, h)
        u0 = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = u0 - v[:, 1, :]
        h *= 2


def moebius_xor_inplace(a: np.ndarray) -> None:
    size = a.shape[0]
    h = 1
    while h < size:
        v = a.reshape(-1, 2, h)
        v[:, 1, :] ^= v[:, 0, :]
        h *= 2


def moebius_int_inplace(a: np.ndarray) -> None:
    size = a.shape[0]
    h = 1
    while h < size:
        v = a.reshape(-1, 2, h)
        v[:, 1, :] -= v[:, 0, :]
        h *= 2


def decision_depth(bits: np.ndarray, n: int) -> int:
    """Same recurrence as the compiled version, vectorized level by level."""
    total = 3**n
    codes = np.arange(total)
    digits = np.empty((n, total), dtype=np.int8)
    t = codes.copy()
    for i in range(n):
        digits[i] = t % 3
        t //= 3
    free = digits == 2
    stars = free.sum(axis=0)
    pow3 = 3 ** np.arange(n)

    point = np.zeros(total, dtype=np.int64)
    for i in range(n):
        point |= (digits[i] == 1).astype(np.int64) << i
    lo = bits[point].astype(np.uint8)
    hi = lo.copy()
    depth = np.zeros(total, dtype=np.int16)
    for c in range(1, n + 1):
        level = np.nonzero(stars == c)[0]
        # any free axis gives the same min/max, use the first one
        first = np.argmax(free[:, level], axis=0)
        c0 = level - 2 * pow3[first]
        c1 = level - pow3[first]
        lo[level] = np.minimum(lo[c0], lo[c1])
        hi[level] = np.maximum(hi[c0], hi[c1])
        best = np.full(level.shape[0], 1 << 12, dtype=np.int16)
        for i in range(n):
            sel = free[i, level]
            s = level[sel]
            cand = 1 + np.maximum(depth[s - 2 * pow3[i]], depth[s - pow3[i]])
            best[sel] = np.minimum(best[sel], cand)
        best[lo[level] == hi[level]] = 0
        depth[level] = best
    return int(depth[total - 1])


def apply_sparse_gate(
    amps: np.ndarray,
    bases: np.ndarray,
    offsets: np.ndarray,
    indptr: np.ndarray,
    indices: np.ndarray,
    data: np.ndarray,
) -> None:
    d = offsets.shape[0]
    m = np.zeros((d, d), dtype=complex)
    for r in range(d):
        m[r, indices[indptr[r] : indptr[r + 1]]] = data[indptr[r] : indptr[r + 1]]
    where = bases[:, None] + offsets[None, :]
    amps[:, where] = amps[:, where] @ m.T


def max_block_mass(amps: np.ndarray, bases: np.ndarray, offsets: np.ndarray) -> float:
    part = np.abs(amps[:, bases[:, None] + offsets[None, :]]) ** 2
    return float(np.max(np.sum(part.reshape(amps.shape[0], -1), axis=1)))
