"""Classical side: parity decision trees, the granularity lower bound, brute-force D and D+.

A parity query on index set S returns XOR of x_i over S (1-based indices). The
empty set is the constant 0 and is never sent as a query.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._core import decision_depth
from .boolfn import TruthTable, max_granularity
from .classes import GammaSpec, MMBentSpec, PdspSpec, SpecError

BRUTE_D_MAX_N = 14
BRUTE_DPLUS_MAX_N = 5


@dataclass
class ParityTreeTrace:
    output: int
    parities: list[tuple[tuple[int, ...], int]] = field(default_factory=list)
    induced_two_bit_cost: int | None = None

    @property
    def queries(self) -> int:
        return len(self.parities)

    def replay_ok(self, x: Sequence[int]) -> bool:
        return all(sum(int(x[i - 1]) for i in s) % 2 == v for s, v in self.parities)


class _Asker:
    def __init__(self, x: Sequence[int]) -> None:
        self.x = [int(v) & 1 for v in x]
        self.trace = ParityTreeTrace(0)

    def ask(self, subset: Sequence[int]) -> int:
        s = tuple(sorted(subset))
        if not s:
            return 0
        v = sum(self.x[i - 1] for i in s) % 2
        self.trace.parities.append((s, v))
        return v


def pdsp_parity_tree(spec: PdspSpec, x: Sequence[int], pad: bool = True) -> ParityTreeTrace:
    """n - q + 1 parity queries.

    All but the last variable of each monomial are read singly; one linear
    query then gives f1, and the tilde variables are read singly for f2. When
    every partial product is 0 the linear query is empty; with pad=True a
    filler singleton keeps the count input-independent.
    """
    spec.validate()
    if len(x) != spec.n:
        raise ValueError(f"input length {len(x)} != n = {spec.n}")
    ask = _Asker(x)
    linear: list[int] = []
    for mono in spec.monomials:
        prod = 1
        for v in mono[:-1]:
            prod &= ask.ask([v])
        if prod:
            linear.append(mono[-1])
    if linear:
        f1 = ask.ask(linear)
    else:
        f1 = 0
        if pad:
            ask.ask([spec.monomials[0][-1]])
    f2 = 1
    for v in spec.tilde_vars:
        f2 &= ask.ask([v])
    ask.trace.output = f1 & f2
    return ask.trace


def dplus_lower_bound(tt: TruthTable) -> int:
    """max granularity + 1; 0 for constant functions, which need no query."""
    if tt.n > 24:
        raise ValueError("dplus_lower_bound supports n <= 24")
    if np.all(tt.bits == tt.bits[0]):
        return 0
    return max_granularity(tt) + 1


def mm_two_bit_parity_cost(n: int) -> int:
    return -(-3 * n // 4)


def mm_generalized_parity_tree(spec: MMBentSpec, x: Sequence[int], pad: bool = True) -> ParityTreeTrace:
    """Read x_hat singly, then one parity over the support of phi(x_hat) in x_tilde."""
    spec.validate()
    n, h = spec.n, spec.half
    if len(x) != n:
        raise ValueError(f"input length {len(x)} != n = {n}")
    ask = _Asker(x)
    xh = 0
    for i in range(1, h + 1):
        xh |= ask.ask([i]) << (i - 1)
    p = spec.phi[xh]
    support = [h + 1 + j for j in range(h) if (p >> j) & 1]
    val = ask.ask(support)
    if not support and pad:
        ask.ask([h + 1])
    ask.trace.output = val ^ int(spec.g_bits()[xh])
    ask.trace.induced_two_bit_cost = mm_two_bit_parity_cost(n)
    return ask.trace


def gamma_parity_tree(spec: GammaSpec, x: Sequence[int], pad: bool = True) -> ParityTreeTrace:
    """Same shape as the MM tree, with the variable blocks of a Gamma spec."""
    spec.validate()
    n = spec.n
    if len(x) != n:
        raise ValueError(f"input length {len(x)} != n = {n}")
    ask = _Asker(x)
    seen: dict[int, int] = {}
    for v in spec.y_hat + spec.z_hat:
        seen[v] = ask.ask([v])
    yv = sum(seen[v] << j for j, v in enumerate(spec.y_hat))
    zv = sum(seen[v] << j for j, v in enumerate(spec.z_hat))
    p1, p2 = spec.phi1[yv], spec.phi2[zv]
    support = [v for j, v in enumerate(spec.y_tilde) if (p1 >> j) & 1]
    support += [v for j, v in enumerate(spec.z_tilde) if (p2 >> j) & 1]
    val = ask.ask(support)
    if not support and pad:
        ask.ask([spec.y_tilde[0] if spec.y_tilde else spec.z_tilde[0]])
    if spec.x_prime:
        gi = sum(seen[v] << j for j, v in enumerate(spec.x_prime))
        val ^= int(spec.g_bits()[gi])
    ask.trace.output = val
    ask.trace.induced_two_bit_cost = mm_two_bit_parity_cost(n)
    return ask.trace


def brute_force_D(tt: TruthTable) -> int:
    """Exact deterministic decision-tree depth (3^n subcube DP)."""
    if tt.n > BRUTE_D_MAX_N:
        raise ValueError(f"brute_force_D supports n <= {BRUTE_D_MAX_N}")
    return int(decision_depth(np.ascontiguousarray(tt.bits, dtype=np.uint8), tt.n))


@lru_cache(maxsize=None)
def _zero_masks(n: int) -> tuple[int, ...]:
    """For each nonzero S, the bitmask of points a with S.a = 0."""
    out = []
    for s in range(1, 1 << n):
        m = 0
        for a in range(1 << n):
            if bin(a & s).count("1") % 2 == 0:
                m |= 1 << a
        out.append(m)
    return tuple(out)


def brute_force_Dplus(tt: TruthTable) -> int:
    """Exact parity decision-tree depth, memoized over affine subspaces (point masks)."""
    n = tt.n
    if n > BRUTE_DPLUS_MAX_N:
        raise ValueError(f"brute_force_Dplus supports n <= {BRUTE_DPLUS_MAX_N}")
    ones = 0
    for a, v in enumerate(tt.bits):
        if v:
            ones |= 1 << a
    zeros_of = _zero_masks(n)
    memo: dict[int, int] = {}

    def depth(points: int) -> int:
        hit = points & ones
        if hit == 0 or hit == points:
            return 0
        got = memo.get(points)
        if got is not None:
            return got
        best = n + 1
        for zm in zeros_of:
            lo = points & zm
            if lo == 0 or lo == points:
                continue  # parity constant on this subspace: learns nothing
            cand = 1 + max(depth(lo), depth(points & ~zm))
            if cand < best:
                best = cand
                if best == 1:
                    break
        memo[points] = best
        return best

    return depth((1 << (1 << n)) - 1)


def fact1_chain(tt: TruthTable) -> tuple[int, int, int]:
    """(dplus_lower_bound, brute_force_Dplus, brute_force_D)."""
    if tt.n > BRUTE_DPLUS_MAX_N:
        raise SpecError(f"lower-bound chain needs n <= {BRUTE_DPLUS_MAX_N}")
    return dplus_lower_bound(tt), brute_force_Dplus(tt), brute_force_D(tt)
