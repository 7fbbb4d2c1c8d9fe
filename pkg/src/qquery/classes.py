"""Function families: pdsp, the three-quarter-budget pdsp family, MM bent, f_id, Gamma_n.

Variable indices in specs are 1-based. Permutation tables are indexed by the
integer encoding of their input block (first listed variable = least
significant bit), and the bits of a table entry line up with the listed
output block the same way.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .boolfn import TruthTable, all_inputs, real_poly_degree


class SpecError(ValueError):
    """A family spec violates one of its defining constraints."""


def _block_value(inputs: np.ndarray, block: Sequence[int]) -> np.ndarray:
    """Integer encoding of the listed 1-based variables, per input row."""
    out = np.zeros(inputs.shape[0], dtype=np.int64)
    for pos, var in enumerate(block):
        out |= inputs[:, var - 1].astype(np.int64) << pos
    return out


def _dot(a: np.ndarray, inputs: np.ndarray, block: Sequence[int]) -> np.ndarray:
    acc = np.zeros(inputs.shape[0], dtype=np.uint8)
    for pos, var in enumerate(block):
        acc ^= ((a >> pos) & 1).astype(np.uint8) & inputs[:, var - 1]
    return acc


def _is_bijection(table: Sequence[int], bits: int) -> bool:
    size = 1 << bits
    return len(table) == size and sorted(int(v) for v in table) == list(range(size))


def _canon_partition(blocks: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    normed = [tuple(sorted(int(v) for v in b)) for b in blocks]
    return tuple(sorted(normed, key=lambda b: b[0] if b else 0))


# ---------------------------------------------------------------- pdsp


@dataclass(frozen=True)
class PdspSpec:
    n: int
    hat_vars: tuple[int, ...]
    monomials: tuple[tuple[int, ...], ...]
    tilde_vars: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "hat_vars", tuple(sorted(int(v) for v in self.hat_vars)))
        object.__setattr__(self, "tilde_vars", tuple(sorted(int(v) for v in self.tilde_vars)))
        object.__setattr__(self, "monomials", _canon_partition(self.monomials))

    @property
    def l(self) -> int:  # noqa: E743 - the family's own name for |hat_vars|
        return len(self.hat_vars)

    @property
    def q(self) -> int:
        return len(self.monomials)

    def validate(self) -> None:
        n = self.n
        if n < 1:
            raise SpecError("n must be positive")
        hat, tilde = set(self.hat_vars), set(self.tilde_vars)
        if len(hat) != len(self.hat_vars) or len(tilde) != len(self.tilde_vars):
            raise SpecError("hat_vars and tilde_vars must not repeat variables")
        if hat & tilde:
            raise SpecError("hat_vars and tilde_vars must be disjoint")
        if hat | tilde != set(range(1, n + 1)):
            raise SpecError("hat_vars and tilde_vars must together cover x1..xn")
        seen: list[int] = [v for m in self.monomials for v in m]
        if any(len(m) == 0 for m in self.monomials):
            raise SpecError("monomials must be nonempty")
        if len(seen) != len(set(seen)) or set(seen) != hat:
            raise SpecError("perfect direct sum: every hat variable must appear in exactly one monomial")
        if self.q < 1:
            raise SpecError("need at least one monomial")
        for m in self.monomials:
            if len(m) < self.q:
                raise SpecError(
                    f"each monomial needs at least q={self.q} variables; {list(m)} has {len(m)}"
                )

    def to_json(self) -> dict[str, Any]:
        return {
            "class": "pdsp",
            "n": self.n,
            "hat_vars": list(self.hat_vars),
            "monomials": [list(m) for m in self.monomials],
            "tilde_vars": list(self.tilde_vars),
        }


def pdsp_table(spec: PdspSpec) -> TruthTable:
    x = all_inputs(spec.n)
    f1 = np.zeros(x.shape[0], dtype=np.uint8)
    for m in spec.monomials:
        f1 ^= np.logical_and.reduce(x[:, [v - 1 for v in m]], axis=1).astype(np.uint8)
    if spec.tilde_vars:
        f2 = np.logical_and.reduce(x[:, [v - 1 for v in spec.tilde_vars]], axis=1)
        f1 &= f2.astype(np.uint8)
    return TruthTable(spec.n, f1)


def make_pdsp(spec: PdspSpec) -> TruthTable:
    spec.validate()
    return pdsp_table(spec)


def random_pdsp(rng: np.random.Generator, n: int, q: int, l: int | None = None) -> PdspSpec:  # noqa: E741
    """Uniformly shuffled variables, random monomial sizes (each >= q)."""
    if l is None:
        lo = q * q
        if lo > n:
            raise SpecError(f"pdsp needs l >= q^2 = {lo} > n = {n}")
        l = int(rng.integers(lo, n + 1))
    if l < q * q or l > n:
        raise SpecError(f"need q^2 <= l <= n, got l={l}, q={q}, n={n}")
    perm = [int(v) + 1 for v in rng.permutation(n)]
    hat, tilde = perm[:l], perm[l:]
    sizes = [q] * q
    for _ in range(l - q * q):
        sizes[int(rng.integers(q))] += 1
    blocks, pos = [], 0
    for s in sizes:
        blocks.append(hat[pos : pos + s])
        pos += s
    return PdspSpec(n, tuple(hat), tuple(tuple(b) for b in blocks), tuple(tilde))


# ------------------------------------------------ three-quarter-budget family


@dataclass(frozen=True)
class MainThmSpec:
    """f = (x1...x_{n/2} + g(x')) * prod x_j, j in n/2+1 .. floor(3n/4).

    g is a perfect direct sum on x_{floor(3n/4)+1} .. x_n with t blocks.
    """

    n: int
    t: int
    g_partition: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "g_partition", _canon_partition(self.g_partition))

    @property
    def k(self) -> int:
        return self.n // 2

    @property
    def product_vars(self) -> tuple[int, ...]:
        return tuple(range(self.k + 1, 3 * self.n // 4 + 1))

    @property
    def g_vars(self) -> tuple[int, ...]:
        return tuple(range(3 * self.n // 4 + 1, self.n + 1))

    def validate(self) -> None:
        n, t = self.n, self.t
        if n < 4 or n % 2:
            raise SpecError("n must be even and at least 4")
        if t < 1:
            raise SpecError("t must be at least 1")
        if len(self.g_partition) != t:
            raise SpecError(f"g must have exactly t={t} monomials, got {len(self.g_partition)}")
        flat = [v for b in self.g_partition for v in b]
        if len(flat) != len(set(flat)) or set(flat) != set(self.g_vars):
            raise SpecError(
                f"g blocks must partition x{self.g_vars[0]}..x{n} "
                f"({len(self.g_vars)} variables)"
            )
        for b in self.g_partition:
            if len(b) < t + 1:
                raise SpecError(f"each g monomial needs at least t+1={t + 1} variables; {list(b)} has {len(b)}")

    def pdsp(self) -> PdspSpec:
        hat = tuple(range(1, self.k + 1)) + self.g_vars
        mons = (tuple(range(1, self.k + 1)),) + self.g_partition
        return PdspSpec(self.n, hat, mons, self.product_vars)

    def to_json(self) -> dict[str, Any]:
        return {"class": "main", "n": self.n, "t": self.t, "g_partition": [list(b) for b in self.g_partition]}


def make_main_thm_function(spec: MainThmSpec) -> tuple[TruthTable, PdspSpec]:
    spec.validate()
    ps = spec.pdsp()
    ps.validate()
    return pdsp_table(ps), ps


def feasible_main_partitions(n: int, t: int) -> list[MainThmSpec]:
    """Every t-block partition of the g variables with blocks of size >= t+1."""
    gv = list(range(3 * n // 4 + 1, n + 1))
    out: list[MainThmSpec] = []

    def rec(rest: list[int], blocks: list[list[int]]) -> None:
        if not rest:
            if len(blocks) == t and all(len(b) >= t + 1 for b in blocks):
                out.append(MainThmSpec(n, t, tuple(tuple(b) for b in blocks)))
            return
        head, tail = rest[0], rest[1:]
        for b in blocks:
            b.append(head)
            rec(tail, blocks)
            b.pop()
        if len(blocks) < t:
            blocks.append([head])
            rec(tail, blocks)
            blocks.pop()

    if t >= 1:
        rec(gv, [])
    return out


def _binom(a: int, b: int) -> int:
    if a < 0 or b < 0 or a < b:
        return 0
    return math.comb(a, b)


def count_main_thm_functions(n: int) -> int:
    if n < 4:
        raise SpecError("n too small (need n >= 4)")
    c = -(-n // 4)
    top = math.isqrt(max(c - 1, 0))
    return sum(_binom(c - t * t - t - 1, t - 1) for t in range(1, top + 1))


# ------------------------------------------------------------------ MM bent


@dataclass(frozen=True, eq=False)
class MMBentSpec:
    n: int
    phi: tuple[int, ...]
    g_table: TruthTable | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", tuple(int(v) for v in self.phi))

    @property
    def half(self) -> int:
        return self.n // 2

    def validate(self) -> None:
        if self.n < 2 or self.n % 2:
            raise SpecError("MM bent functions need even n >= 2")
        if not _is_bijection(self.phi, self.half):
            raise SpecError("phi must be a bijection on {0,1}^(n/2)")
        if self.g_table is not None and self.g_table.n != self.half:
            raise SpecError("g must be a table on n/2 variables")

    def g_bits(self) -> np.ndarray:
        if self.g_table is None:
            return np.zeros(1 << self.half, dtype=np.uint8)
        return self.g_table.bits

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MMBentSpec):
            return NotImplemented
        return self.n == other.n and self.phi == other.phi and np.array_equal(self.g_bits(), other.g_bits())

    def to_json(self) -> dict[str, Any]:
        d: dict[str, Any] = {"class": "mm", "n": self.n, "phi": list(self.phi)}
        if self.g_table is not None:
            d["g"] = self.g_table.to_hex()
        return d


def make_mm_bent(spec: MMBentSpec) -> TruthTable:
    spec.validate()
    h = spec.half
    x = all_inputs(spec.n)
    xh = _block_value(x, range(1, h + 1))
    phi = np.asarray(spec.phi, dtype=np.int64)[xh]
    bits = _dot(phi, x, range(h + 1, spec.n + 1)) ^ spec.g_bits()[xh]
    return TruthTable(spec.n, bits)


def make_f_id(n: int) -> TruthTable:
    if n < 2 or n % 2:
        raise SpecError("f_id needs even n >= 2")
    return make_mm_bent(MMBentSpec(n, tuple(range(1 << (n // 2)))))


# ------------------------------------------------------------------- Gamma


@dataclass(frozen=True, eq=False)
class GammaSpec:
    n: int
    y_hat: tuple[int, ...]
    z_hat: tuple[int, ...]
    y_tilde: tuple[int, ...]
    z_tilde: tuple[int, ...]
    phi1: tuple[int, ...]
    phi2: tuple[int, ...]
    x_prime: tuple[int, ...] = ()
    g_table: TruthTable | None = None

    def __post_init__(self) -> None:
        for name in ("y_hat", "z_hat", "y_tilde", "z_tilde", "phi1", "phi2", "x_prime"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))

    @property
    def a(self) -> int:
        return self.n // 4

    @property
    def b(self) -> int:
        return -(-self.n // 4)

    def validate(self) -> None:
        n = self.n
        if n < 4 or n % 2:
            raise SpecError("Gamma specs need even n >= 4")
        a, b = self.a, self.b
        if not _is_bijection(self.phi1, a) or not _is_bijection(self.phi2, b):
            raise SpecError("constraint 1 violated: phi1 and phi2 must be bijections of the block sizes")
        sets = [self.y_hat, self.z_hat, self.y_tilde, self.z_tilde]
        flat = [v for s in sets for v in s]
        if len(flat) != len(set(flat)):
            raise SpecError("constraint 2 violated: y_hat, z_hat, y_tilde, z_tilde must be disjoint")
        sizes = (len(self.y_hat), len(self.z_hat), len(self.y_tilde), len(self.z_tilde))
        if sizes != (a, b, a, b):
            raise SpecError(f"constraint 2 violated: block sizes {sizes}, expected {(a, b, a, b)}")
        h = n // 2
        if set(self.y_hat) | set(self.z_hat) != set(range(1, h + 1)):
            raise SpecError("constraint 3 violated: y_hat and z_hat must cover x1..x_{n/2}")
        if set(self.y_tilde) | set(self.z_tilde) != set(range(h + 1, n + 1)):
            raise SpecError("constraint 3 violated: y_tilde and z_tilde must cover x_{n/2+1}..xn")
        xp = self.x_prime
        cap = -(-n // 8)
        if len(xp) != len(set(xp)) or not set(xp) <= set(range(1, h + 1)):
            raise SpecError("constraint 4 violated: x' must be a subset of x1..x_{n/2}")
        if len(set(xp) & set(self.y_hat)) > cap or len(set(xp) & set(self.z_hat)) > cap:
            raise SpecError(f"constraint 4 violated: x' may share at most {cap} variables with each of y_hat, z_hat")
        if self.g_table is not None:
            if not xp or self.g_table.n != len(xp):
                raise SpecError("g must be a table on exactly the x' variables")

    def g_bits(self) -> np.ndarray:
        if self.g_table is None:
            return np.zeros(1 << len(self.x_prime), dtype=np.uint8)
        return self.g_table.bits

    def is_canonical(self) -> bool:
        a, h = self.a, self.n // 2
        return (
            self.y_hat == tuple(range(1, a + 1))
            and self.z_hat == tuple(range(a + 1, h + 1))
            and self.y_tilde == tuple(range(h + 1, h + a + 1))
            and self.z_tilde == tuple(range(h + a + 1, self.n + 1))
        )

    def to_json(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "class": "gamma",
            "n": self.n,
            "y_hat": list(self.y_hat),
            "z_hat": list(self.z_hat),
            "y_tilde": list(self.y_tilde),
            "z_tilde": list(self.z_tilde),
            "phi1": list(self.phi1),
            "phi2": list(self.phi2),
            "x_prime": list(self.x_prime),
        }
        if self.g_table is not None:
            d["g"] = self.g_table.to_hex()
        return d


def make_gamma(spec: GammaSpec) -> TruthTable:
    spec.validate()
    x = all_inputs(spec.n)
    p1 = np.asarray(spec.phi1, dtype=np.int64)[_block_value(x, spec.y_hat)]
    p2 = np.asarray(spec.phi2, dtype=np.int64)[_block_value(x, spec.z_hat)]
    bits = _dot(p1, x, spec.y_tilde) ^ _dot(p2, x, spec.z_tilde)
    if spec.x_prime:
        bits ^= spec.g_bits()[_block_value(x, spec.x_prime)]
    return TruthTable(spec.n, bits)


def gamma_mm_equivalent(spec: GammaSpec) -> MMBentSpec | None:
    """The MM spec with phi = phi1 || phi2, when the split is canonical."""
    spec.validate()
    if not spec.is_canonical():
        return None
    a, h = spec.a, spec.n // 2
    phi = tuple(int(spec.phi1[v & ((1 << a) - 1)]) | (int(spec.phi2[v >> a]) << a) for v in range(1 << h))
    g = None
    if spec.x_prime:
        xh = all_inputs(h)
        g = TruthTable(h, spec.g_bits()[_block_value(xh, spec.x_prime)])
    return MMBentSpec(spec.n, phi, g)


def random_gamma_spec(n: int, seed: int, *, canonical: bool = False) -> GammaSpec:
    """Seeded random Gamma_n instance (numpy PCG64, 64-bit seed)."""
    rng = np.random.Generator(np.random.PCG64(seed & 0xFFFF_FFFF_FFFF_FFFF))
    if n < 4 or n % 2:
        raise SpecError("Gamma specs need even n >= 4")
    a, b, h = n // 4, -(-n // 4), n // 2
    hat = list(range(1, h + 1))
    tilde = list(range(h + 1, n + 1))
    if not canonical:
        hat = [hat[i] for i in rng.permutation(h)]
        tilde = [tilde[i] for i in rng.permutation(h)]
    y_hat, z_hat = sorted(hat[:a]), sorted(hat[a:])
    y_tilde, z_tilde = sorted(tilde[:a]), sorted(tilde[a:])
    phi1 = [int(v) for v in rng.permutation(1 << a)]
    phi2 = [int(v) for v in rng.permutation(1 << b)]
    cap = -(-n // 8)
    ky = int(rng.integers(0, min(cap, a) + 1))
    kz = int(rng.integers(0, min(cap, b) + 1))
    xp = sorted([y_hat[i] for i in rng.permutation(a)[:ky]] + [z_hat[i] for i in rng.permutation(b)[:kz]])
    g = None
    if xp:
        g = TruthTable(len(xp), rng.integers(0, 2, size=1 << len(xp)).astype(np.uint8))
    return GammaSpec(n, tuple(y_hat), tuple(z_hat), tuple(y_tilde), tuple(z_tilde),
                     tuple(phi1), tuple(phi2), tuple(xp), g)


def count_gamma_raw(n: int, g_arity: int | None = None) -> tuple[int, int]:
    """(raw product, floor of raw / (n! 2^(n+1))).

    raw = (2^floor(n/4))! * (2^ceil(n/4))! * 2^(2^g_arity), the number of
    (phi1, phi2, g) choices for one fixed split. g_arity defaults to n/2
    (g free over all of x_hat); pass ceil(n/4) for the smaller x' count.
    """
    if n < 4:
        raise SpecError("n too small (need n >= 4)")
    if n % 2 or n > 40:
        raise SpecError("count_gamma_raw needs even n <= 40")
    a, b = n // 4, -(-n // 4)
    if g_arity is None:
        g_arity = n // 2
    raw = math.factorial(1 << a) * math.factorial(1 << b) * (1 << (1 << g_arity))
    return raw, raw // (math.factorial(n) * (1 << (n + 1)))


# --------------------------------------------------------- PNP equivalence


def pnp_equivalent(f: TruthTable, g: TruthTable) -> bool:
    """Brute force over permutations, input negations and output complement."""
    if f.n != g.n:
        raise ValueError("arity mismatch")
    n = f.n
    if n > 5:
        raise ValueError("pnp_equivalent is brute force; n must be <= 5")
    # cheap invariants first
    wf, wg = int(f.bits.sum()), int(g.bits.sum())
    size = 1 << n
    if wf not in (wg, size - wg):
        return False
    if real_poly_degree(f) != real_poly_degree(g):
        return False
    x = all_inputs(n)
    gb = g.bits
    for perm in itertools.permutations(range(n)):
        moved = x[:, list(perm)]
        for neg in range(size):
            negv = ((neg >> np.arange(n)) & 1).astype(np.uint8)
            idx = _block_value(moved ^ negv, range(1, n + 1))
            img = f.bits[idx]
            if np.array_equal(img, gb) or np.array_equal(img ^ 1, gb):
                return True
    return False


# ------------------------------------------------------------ JSON specs


@dataclass(frozen=True)
class FIdSpec:
    n: int

    def validate(self) -> None:
        if self.n < 2 or self.n % 2:
            raise SpecError("f_id needs even n >= 2")

    def to_json(self) -> dict[str, Any]:
        return {"class": "f_id", "n": self.n}


FunctionSpec = PdspSpec | MainThmSpec | MMBentSpec | GammaSpec | FIdSpec


def _g_from(d: dict[str, Any], nvars: int) -> TruthTable | None:
    if "g" not in d or d["g"] is None:
        return None
    return TruthTable.from_hex(str(d["g"]), nvars)


def spec_from_json(d: dict[str, Any]) -> Any:
    cls = d.get("class")
    n = int(d["n"])
    if cls == "pdsp":
        return PdspSpec(n, tuple(d["hat_vars"]), tuple(tuple(m) for m in d["monomials"]), tuple(d.get("tilde_vars", ())))
    if cls == "main":
        return MainThmSpec(n, int(d["t"]), tuple(tuple(b) for b in d["g_partition"]))
    if cls == "mm":
        return MMBentSpec(n, tuple(d["phi"]), _g_from(d, n // 2))
    if cls == "gamma":
        xp = tuple(d.get("x_prime", ()))
        return GammaSpec(n, tuple(d["y_hat"]), tuple(d["z_hat"]), tuple(d["y_tilde"]), tuple(d["z_tilde"]),
                         tuple(d["phi1"]), tuple(d["phi2"]), xp, _g_from(d, len(xp)) if xp else None)
    if cls == "f_id":
        return FIdSpec(n)
    raise SpecError(f"unknown class {cls!r}")


def load_spec(path: str) -> Any:
    with open(path) as fh:
        return spec_from_json(json.load(fh))


def spec_table(spec: Any) -> TruthTable:
    if isinstance(spec, PdspSpec):
        return make_pdsp(spec)
    if isinstance(spec, MainThmSpec):
        return make_main_thm_function(spec)[0]
    if isinstance(spec, MMBentSpec):
        return make_mm_bent(spec)
    if isinstance(spec, GammaSpec):
        return make_gamma(spec)
    if isinstance(spec, FIdSpec):
        return make_f_id(spec.n)
    raise TypeError(f"not a function spec: {type(spec).__name__}")

