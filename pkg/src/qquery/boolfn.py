"""Truth tables, algebraic normal form, and exact spectral quantities.

Convention used throughout the package: in a table of length 2**n the entry at
index a is f(x) where x_1 is the least significant bit of a, x_2 the next, etc.
All arithmetic here is integer or dyadic; no floats.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _core

MAX_VARS = 24
EXHAUSTIVE_LIMIT = 12


def _lowbit_exponent(v: int) -> int:
    return (v & -v).bit_length() - 1


@dataclass(frozen=True)
class DyadicRational:
    """numerator / 2**exponent in lowest terms; zero is (0, 0)."""

    numerator: int
    exponent: int

    def __post_init__(self) -> None:
        if self.exponent < 0:
            raise ValueError("exponent must be non-negative")
        if self.numerator == 0 and self.exponent != 0:
            raise ValueError("zero must be stored as (0, 0)")
        if self.numerator != 0 and self.exponent > 0 and self.numerator % 2 == 0:
            raise ValueError("not in lowest terms")

    @classmethod
    def reduce(cls, numerator: int, exponent: int) -> "DyadicRational":
        numerator = int(numerator)
        if numerator == 0:
            return cls(0, 0)
        if exponent < 0:
            return cls(numerator << -exponent, 0)
        shift = min(_lowbit_exponent(abs(numerator)), exponent)
        return cls(numerator >> shift, exponent - shift)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __str__(self) -> str:
        if self.exponent == 0:
            return str(self.numerator)
        return f"{self.numerator}/{1 << self.exponent}"


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_VARS:
        raise ValueError(f"n must be in [1, {MAX_VARS}], got {n}")


@dataclass(frozen=True, eq=False)
class TruthTable:
    n: int
    bits: np.ndarray

    def __post_init__(self) -> None:
        _check_n(self.n)
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.shape != (1 << self.n,):
            raise ValueError(f"table length must be 2**{self.n}, got {bits.shape}")
        if bits.size and bits.max() > 1:
            raise ValueError("table entries must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruthTable):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash((self.n, self.bits.tobytes()))

    def __xor__(self, other: "TruthTable") -> "TruthTable":
        if self.n != other.n:
            raise ValueError("arity mismatch")
        return TruthTable(self.n, self.bits ^ other.bits)

    def __call__(self, x: Sequence[int]) -> int:
        return int(self.bits[encode(x)])

    @classmethod
    def from_function(cls, n: int, fn: Callable[[tuple[int, ...]], int]) -> "TruthTable":
        bits = [fn(decode(a, n)) & 1 for a in range(1 << n)]
        return cls(n, np.array(bits, dtype=np.uint8))

    @classmethod
    def from_hex(cls, text: str, n: int) -> "TruthTable":
        _check_n(n)
        text = text.strip().lower().removeprefix("0x")
        if not text or not re.fullmatch(r"[0-9a-f]+", text):
            raise ValueError(f"not a hex string: {text!r}")
        value = int(text, 16)
        size = 1 << n
        if value >> size:
            raise ValueError(f"hex value has more than 2**{n} bits")
        raw = value.to_bytes((size + 7) // 8, "little")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:size]
        return cls(n, bits)

    def to_hex(self) -> str:
        size = 1 << self.n
        value = int.from_bytes(np.packbits(self.bits, bitorder="little").tobytes(), "little")
        return format(value, "x").zfill(max(1, size // 4))

    def signs(self) -> np.ndarray:
        """(-1)**f as int64."""
        return 1 - 2 * self.bits.astype(np.int64)


def encode(x: Sequence[int]) -> int:
    return sum((int(v) & 1) << i for i, v in enumerate(x))


def decode(a: int, n: int) -> tuple[int, ...]:
    return tuple((a >> i) & 1 for i in range(n))


def all_inputs(n: int) -> np.ndarray:
    """Every input as a row, row a is decode(a, n)."""
    a = np.arange(1 << n, dtype=np.int64)
    return ((a[:, None] >> np.arange(n)) & 1).astype(np.uint8)


@dataclass(frozen=True)
class ANF:
    """Monomials as bitmasks over 0-based variable positions; 0 is the constant 1."""

    n: int
    monomials: frozenset[int]

    def __post_init__(self) -> None:
        _check_n(self.n)
        mons = frozenset(int(m) for m in self.monomials)
        for m in mons:
            if m < 0 or m >> self.n:
                raise ValueError(f"monomial {m:#x} uses a variable outside [1, {self.n}]")
        object.__setattr__(self, "monomials", mons)

    @classmethod
    def from_sets(cls, n: int, monomials: Iterable[Iterable[int]]) -> "ANF":
        """Build from 1-based index sets. Repeated monomials cancel."""
        acc: set[int] = set()
        for mono in monomials:
            mask = 0
            for i in mono:
                if i < 1:
                    raise ValueError("indices are 1-based")
                mask |= 1 << (i - 1)
            acc ^= {mask}
        return cls(n, frozenset(acc))

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "ANF":
        return parse_anf(text, n)

    def __str__(self) -> str:
        if not self.monomials:
            return "0"
        terms = []
        for m in sorted(self.monomials, key=lambda m: (bin(m).count("1"), _sort_key(m))):
            if m == 0:
                terms.append("1")
            else:
                terms.append("*".join(f"x{i + 1}" for i in range(self.n) if m >> i & 1))
        return " + ".join(terms)


def _sort_key(m: int) -> list[int]:
    return [i for i in range(m.bit_length()) if m >> i & 1]


_VAR = re.compile(r"x(\d+)")


def parse_anf(text: str, n: int | None = None) -> ANF:
    """Parse "x1*x2 + x3x4 + 1". n defaults to the largest index used."""
    if not text.strip():
        raise ValueError("empty ANF string at position 0")
    sets: list[list[int]] = []
    pos = 0
    for raw in text.split("+"):
        term = raw.strip()
        start = pos + (len(raw) - len(raw.lstrip()))
        pos += len(raw) + 1
        if term in ("1",):
            sets.append([])
            continue
        if term == "0":
            continue
        idx: list[int] = []
        k = 0
        body = term.replace(" ", "")
        while k < len(body):
            if body[k] == "*":
                k += 1
                continue
            m = _VAR.match(body, k)
            if not m:
                raise ValueError(f"unexpected {body[k]!r} at position {start + k}")
            i = int(m.group(1))
            if i == 0:
                raise ValueError(f"indices are 1-based (x0 at position {start + k})")
            idx.append(i)
            k = m.end()
        if not idx:
            raise ValueError(f"empty monomial at position {start}")
        sets.append(idx)
    top = max((max(s) for s in sets if s), default=1)
    if n is None:
        n = top
    elif top > n:
        raise ValueError(f"variable x{top} exceeds n={n}")
    return ANF.from_sets(n, sets)


def anf_to_truth_table(anf: ANF) -> TruthTable:
    coeffs = np.zeros(1 << anf.n, dtype=np.uint8)
    for m in anf.monomials:
        coeffs[m] = 1
    _core.moebius_xor_inplace(coeffs)
    return TruthTable(anf.n, coeffs)


def truth_table_to_anf(tt: TruthTable) -> ANF:
    coeffs = tt.bits.copy()
    _core.moebius_xor_inplace(coeffs)
    return ANF(tt.n, frozenset(int(m) for m in np.flatnonzero(coeffs)))


def weight(tt: TruthTable) -> int:
    return int(np.count_nonzero(tt.bits))


def _parity_of(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    shift = 32
    while shift:
        v ^= v >> shift
        shift //= 2
    return v & 1


def walsh_sum(tt: TruthTable, s: int) -> int:
    """Integer sum over x of (-1)^(f(x) + s.x), computed directly."""
    xs = np.arange(1 << tt.n, dtype=np.int64)
    chi = 1 - 2 * _parity_of(xs & s)
    return int(np.dot(tt.signs(), chi))


def walsh_sums_exhaustive(tt: TruthTable) -> np.ndarray:
    size = 1 << tt.n
    signs = tt.signs()
    xs = np.arange(size, dtype=np.int64)
    out = np.empty(size, dtype=np.int64)
    step = max(1, (1 << 22) // size)
    for s0 in range(0, size, step):
        ss = np.arange(s0, min(size, s0 + step), dtype=np.int64)
        chi = 1 - 2 * _parity_of(ss[:, None] & xs[None, :])
        out[s0 : s0 + len(ss)] = chi @ signs
    return out


def walsh_sums_fast(tt: TruthTable) -> np.ndarray:
    a = np.ascontiguousarray(tt.signs())
    _core.fwht_inplace(a)
    return a


def walsh_sums(tt: TruthTable, method: str = "auto") -> np.ndarray:
    """Unnormalized spectrum W(S) = 2**n * f^(S), indexed by subset mask."""
    if method == "auto":
        method = "exhaustive" if tt.n <= EXHAUSTIVE_LIMIT else "fast"
    if method == "exhaustive":
        return walsh_sums_exhaustive(tt)
    if method == "fast":
        return walsh_sums_fast(tt)
    raise ValueError(f"unknown method {method!r}")


def walsh_coefficient(tt: TruthTable, s: int) -> DyadicRational:
    if s < 0 or s >> tt.n:
        raise ValueError(f"subset mask {s:#x} not within [n]")
    return DyadicRational.reduce(walsh_sum(tt, s), tt.n)


def walsh_spectrum(tt: TruthTable, method: str = "auto") -> list[DyadicRational]:
    return [DyadicRational.reduce(int(w), tt.n) for w in walsh_sums(tt, method)]


def granularity(q: DyadicRational) -> int:
    return 0 if q.numerator == 0 else q.exponent


def _granularities(sums: np.ndarray, n: int) -> np.ndarray:
    w = np.abs(sums)
    nz = w != 0
    lowbit = w & -w
    # 2-adic valuation; |W(S)| <= 2**n so n+1 shifts cover it
    val = np.zeros_like(w)
    for k in range(1, n + 1):
        val += (lowbit >> k) != 0
    return np.where(nz, np.maximum(n - val, 0), 0)


def max_granularity(tt: TruthTable) -> int:
    return int(_granularities(walsh_sums(tt), tt.n).max())


def real_poly_degree(tt: TruthTable) -> int:
    c = tt.bits.astype(np.int64)
    _core.moebius_int_inplace(c)
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return 0
    return int(max(int(m).bit_count() for m in nz))


def real_poly_coefficients(tt: TruthTable) -> dict[int, int]:
    """Nonzero coefficients of the multilinear real polynomial, keyed by mask."""
    c = tt.bits.astype(np.int64)
    _core.moebius_int_inplace(c)
    return {int(m): int(c[m]) for m in np.flatnonzero(c)}


def and_table(n: int, variables: Iterable[int]) -> TruthTable:
    """Product of the listed 1-based variables (all-ones over the empty set)."""
    mask = 0
    for i in variables:
        mask |= 1 << (i - 1)
    a = np.arange(1 << n, dtype=np.int64)
    return TruthTable(n, ((a & mask) == mask).astype(np.uint8))


def parity_table(n: int, variables: Iterable[int] | None = None) -> TruthTable:
    mask = (1 << n) - 1 if variables is None else sum(1 << (i - 1) for i in variables)
    a = np.arange(1 << n, dtype=np.int64)
    return TruthTable(n, _parity_of(a & mask).astype(np.uint8))


def constant_table(n: int, value: int) -> TruthTable:
    return TruthTable(n, np.full(1 << n, value & 1, dtype=np.uint8))
