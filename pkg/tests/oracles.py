"""Independent brute-force references. Plain Python loops, no package transforms."""

from __future__ import annotations

import itertools
from fractions import Fraction


def points(n):
    """Inputs in table order: x1 is the least significant bit of the index."""
    for a in range(1 << n):
        yield a, tuple((a >> i) & 1 for i in range(n))


def table_of(fn, n):
    return [fn(x) & 1 for _, x in points(n)]


def walsh(bits, n, s):
    total = 0
    for a, x in points(n):
        dot = sum(x[i] for i in range(n) if (s >> i) & 1)
        total += (-1) ** ((bits[a] + dot) % 2)
    return Fraction(total, 1 << n)


def gran(q: Fraction) -> int:
    if q == 0:
        return 0
    d, k = q.denominator, 0
    while d > 1:
        d //= 2
        k += 1
    return k


def anf_masks(bits, n):
    """GF(2) coefficient of each monomial via the subset sum, one mask at a time."""
    out = set()
    for m in range(1 << n):
        c = 0
        for a in range(1 << n):
            if a & ~m == 0:
                c ^= bits[a]
        if c:
            out.add(m)
    return out


def real_degree(bits, n):
    best = 0
    for m in range(1 << n):
        c = 0
        for a in range(1 << n):
            if a & ~m == 0:
                c += (-1) ** (bin(m).count("1") - bin(a).count("1")) * bits[a]
        if c:
            best = max(best, bin(m).count("1"))
    return best


def decision_depth(bits, n):
    """Minimax over restrictions (plain recursion, lowest index first)."""
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def go(fixed):
        vals = {bits[a] for a, x in points(n) if all(f is None or f == v for f, v in zip(fixed, x))}
        if len(vals) == 1:
            return 0
        best = n
        for i, f in enumerate(fixed):
            if f is None:
                kids = [go(fixed[:i] + (b,) + fixed[i + 1:]) for b in (0, 1)]
                best = min(best, 1 + max(kids))
        return best

    return go((None,) * n)


def prod(vals):
    out = 1
    for v in vals:
        out &= v
    return out


def f1(x):
    k = len(x) // 2
    return prod(x[:k]) ^ prod(x[k:])


def f2(x):
    n = len(x)
    return prod(x[: 3 * n // 4]) ^ prod(x[n // 2 :])


def f_id(x):
    h = len(x) // 2
    return sum(x[i] & x[h + i] for i in range(h)) % 2


def subsets(n):
    return itertools.chain.from_iterable(itertools.combinations(range(1, n + 1), r) for r in range(n + 1))


def gamma(spec, x):
    """phi1(y_hat).y_tilde + phi2(z_hat).z_tilde + g(x') read straight off the GammaSpec fields."""

    def val(block):
        return sum(x[v - 1] << j for j, v in enumerate(block))

    p1, p2 = spec.phi1[val(spec.y_hat)], spec.phi2[val(spec.z_hat)]
    out = sum((p1 >> j) & x[v - 1] for j, v in enumerate(spec.y_tilde))
    out += sum((p2 >> j) & x[v - 1] for j, v in enumerate(spec.z_tilde))
    if spec.x_prime:
        out += int(spec.g_bits()[val(spec.x_prime)])
    return out % 2
