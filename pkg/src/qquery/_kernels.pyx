# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Every function mutates or reads a contiguous numpy buffer."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def fwht_inplace(cnp.int64_t[::1] a):
    """Unnormalized Walsh-Hadamard butterflies, in place."""
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t h = 1, i, j
    cdef cnp.int64_t u, v
    while h < size:
        i = 0
        while i < size:
            for j in range(i, i + h):
                u = a[j]
                v = a[j + h]
                a[j] = u + v
                a[j + h] = u - v
            i += 2 * h
        h *= 2


def moebius_xor_inplace(cnp.uint8_t[::1] a):
    """Binary Moebius transform over GF(2), in place (an involution)."""
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t h = 1, i, j
    while h < size:
        i = 0
        while i < size:
            for j in range(i, i + h):
                a[j + h] ^= a[j]
            i += 2 * h
        h *= 2


def moebius_int_inplace(cnp.int64_t[::1] a):
    """Integer Moebius transform: a[S] <- sum over T subset S of (-1)^|S-T| a[T]."""
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t h = 1, i, j
    while h < size:
        i = 0
        while i < size:
            for j in range(i, i + h):
                a[j + h] -= a[j]
            i += 2 * h
        h *= 2


def decision_depth(const cnp.uint8_t[::1] bits, int n):
    """Deterministic decision-tree depth by DP over all 3^n subcubes.

    Subcube s is written in base 3 with digit 2 meaning "free". Both children
    of a free digit have smaller codes, so a single increasing sweep suffices.
    """
    cdef Py_ssize_t total = 1, s, t, child0, child1, p
    cdef int i, best, cand, d0, d1, digit
    for i in range(n):
        total *= 3
    cdef cnp.uint8_t[::1] lo = np.empty(total, dtype=np.uint8)
    cdef cnp.uint8_t[::1] hi = np.empty(total, dtype=np.uint8)
    cdef cnp.uint8_t[::1] depth = np.empty(total, dtype=np.uint8)
    cdef Py_ssize_t[::1] pow3 = np.empty(n + 1, dtype=np.intp)
    pow3[0] = 1
    for i in range(n):
        pow3[i + 1] = pow3[i] * 3
    for s in range(total):
        t = s
        p = 0
        best = -1
        digit = 0
        for i in range(n):
            digit = t % 3
            t //= 3
            if digit == 2:
                best = i
                break
            if digit == 1:
                p |= (<Py_ssize_t>1) << i
        if best < 0:
            lo[s] = bits[p]
            hi[s] = bits[p]
            depth[s] = 0
            continue
        child0 = s - 2 * pow3[best]
        child1 = s - pow3[best]
        lo[s] = lo[child0] if lo[child0] < lo[child1] else lo[child1]
        hi[s] = hi[child0] if hi[child0] > hi[child1] else hi[child1]
        if lo[s] == hi[s]:
            depth[s] = 0
            continue
        best = 255
        t = s
        for i in range(n):
            digit = t % 3
            t //= 3
            if digit == 2:
                d0 = depth[s - 2 * pow3[i]]
                d1 = depth[s - pow3[i]]
                cand = 1 + (d0 if d0 > d1 else d1)
                if cand < best:
                    best = cand
        depth[s] = best
    return int(depth[total - 1])


def apply_sparse_gate(
    double complex[:, ::1] amps,
    const cnp.int64_t[::1] bases,
    const cnp.int64_t[::1] offsets,
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] indices,
    const double complex[::1] data,
):
    """amps[:, base + offsets] <- M @ amps[:, base + offsets] for every base.

    M is given in CSR form. Rows of `amps` are independent batch entries.
    """
    cdef Py_ssize_t batch = amps.shape[0], nb = bases.shape[0], d = offsets.shape[0]
    cdef Py_ssize_t row, j, r, p, base
    cdef double complex acc
    cdef bint nonzero
    cdef double complex[::1] buf = np.empty(d, dtype=np.complex128)
    for row in range(batch):
        for j in range(nb):
            base = bases[j]
            nonzero = False
            for r in range(d):
                buf[r] = amps[row, base + offsets[r]]
                if buf[r] != 0:
                    nonzero = True
            if not nonzero:
                continue  # most blocks are empty: the state is sparse per row
            for r in range(d):
                acc = 0
                for p in range(indptr[r], indptr[r + 1]):
                    acc = acc + data[p] * buf[indices[p]]
                amps[row, base + offsets[r]] = acc


def max_block_mass(
    const double complex[:, ::1] amps,
    const cnp.int64_t[::1] bases,
    const cnp.int64_t[::1] offsets,
):
    """Largest, over batch rows, of the squared norm on base + offsets."""
    cdef Py_ssize_t batch = amps.shape[0], nb = bases.shape[0], d = offsets.shape[0]
    cdef Py_ssize_t row, j, r
    cdef double acc, worst = 0.0
    cdef double complex z
    for row in range(batch):
        acc = 0.0
        for j in range(nb):
            for r in range(d):
                z = amps[row, bases[j] + offsets[r]]
                acc += z.real * z.real + z.imag * z.imag
        if acc > worst:
            worst = acc
    return worst
