"""State-vector simulator for the query model.

Basis: query register |0>..|n> (dimension n+1) tensor w work qubits. Qubits
are 0-based here; qubit 0 plays the role of w_1. A QState may carry a batch of
independent states (one per oracle input) that see the same gate sequence,
which is how exhaustive verification stays fast.
"""

from __future__ import annotations

import contextlib
import csv
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from ._core import apply_sparse_gate, max_block_mass

DEFAULT_CAP = 1 << 22
UNITARY_TOL = 1e-12
SUPPORT_TOL = 1e-9
PURITY_TOL = 1e-9
_R2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class Layout:
    n: int
    w: int
    cap: int = DEFAULT_CAP

    def __post_init__(self) -> None:
        if self.n < 1 or self.w < 0:
            raise ValueError("need n >= 1 and w >= 0")
        if self.dim > self.cap:
            raise ValueError(f"state dimension {(self.n + 1)}*2^{self.w} exceeds cap {self.cap}")

    @property
    def dim(self) -> int:
        return (self.n + 1) << self.w


@dataclass(frozen=True)
class GateReport:
    name: str
    dim: int
    defect: float


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary on (query register if on_query) tensor the listed qubits.

    Matrix rows/cols are ordered query index major, then qubits in listed
    order, each qubit most significant first. Controls restrict the action to
    the subspace where every (qubit, value) pair matches.
    """

    name: str
    matrix: np.ndarray
    n: int
    on_query: bool
    qubits: tuple[int, ...] = ()
    controls: tuple[tuple[int, int], ...] = ()
    # runtime support check on the query register: "" off, "all" on the whole
    # acted subspace, "q1" only where the first listed qubit is 1
    binary_query: str = ""

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        expect = (self.n + 1 if self.on_query else 1) << len(self.qubits)
        if m.shape != (expect, expect):
            raise ValueError(f"{self.name}: matrix shape {m.shape}, expected {(expect, expect)}")
        used = set(self.qubits)
        for q, v in self.controls:
            if q in used:
                raise ValueError(f"{self.name}: control qubit {q} overlaps a target or another control")
            if v not in (0, 1):
                raise ValueError("control values are 0 or 1")
            used.add(q)

    def full_matrix(self) -> np.ndarray:
        """Matrix including controls (control qubits most significant)."""
        base = self.matrix
        for _ in self.controls:
            d = base.shape[0]
            out = np.eye(2 * d, dtype=complex)
            out[d:, d:] = base
            base = out
        return base

    def report(self) -> GateReport:
        u = self.full_matrix()
        defect = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
        return GateReport(self.name, u.shape[0], defect)

    def dagger(self) -> "Gate":
        return replace(self, name=self.name + "^dag", matrix=self.matrix.conj().T)


# ------------------------------------------------------------ query gates

_fault: dict[str, tuple[int, int]] = {}


@contextlib.contextmanager
def corrupt_gate(name: str, rows: tuple[int, int] = (0, 1)) -> Iterator[None]:
    """Test hook: every gate of family `name` built inside the block gets two rows swapped.

    The result is still unitary, so only an output check can catch it.
    """
    _fault[name] = rows
    try:
        yield
    finally:
        _fault.pop(name, None)


def _maybe_corrupt(name: str, m: np.ndarray) -> np.ndarray:
    rows = _fault.get(name)
    if rows is None:
        return m
    m = m.copy()
    m[list(rows)] = m[list(rows[::-1])]
    return m


def _check_index(n: int, i: int, lo: int) -> None:
    if not lo <= i <= n:
        raise ValueError(f"query index {i} outside [{lo}, {n}]")


@lru_cache(maxsize=None)
def _perm_matrix(n: int, i: int) -> np.ndarray:
    m = np.eye(n + 1)
    m[[1, i]] = m[[i, 1]]
    return m


def perm_gate(n: int, i: int) -> Gate:
    """P^n_i: swaps |1> and |i>."""
    _check_index(n, i, 1)
    return Gate(f"P[{i}]", _perm_matrix(n, i), n, True)


@lru_cache(maxsize=None)
def _par_matrix(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n + 1, n + 1))
    m[0, i] = m[0, j] = _R2
    m[1, i] = _R2
    m[1, j] = -_R2
    rest = [s for s in range(n + 1) if s not in (i, j)]
    for target, source in enumerate(rest, start=2):
        m[target, source] = 1.0
    return m


def par_gate(n: int, i: int, j: int) -> Gate:
    """PAR^n_{i,j}: (|i>+|j>)/sqrt2 -> |0>, (|i>-|j>)/sqrt2 -> |1>.

    The remaining basis states, in increasing order, go to |2>, |3>, ... in
    increasing order. i > j is accepted and swaps the roles of the two
    indices (only the sign of the |1> image changes).
    """
    _check_index(n, i, 0)
    _check_index(n, j, 0)
    if i == j:
        raise ValueError("PAR needs two distinct indices")
    return Gate(f"PAR[{i},{j}]", _maybe_corrupt("PAR", _par_matrix(n, i, j)), n, True)


def sup_gate(n: int, i: int, j: int) -> Gate:
    """S^n_{i,j} = PAR^dagger: |0> -> (|i>+|j>)/sqrt2, |1> -> (|i>-|j>)/sqrt2."""
    _check_index(n, i, 0)
    _check_index(n, j, 0)
    if i == j:
        raise ValueError("S needs two distinct indices")
    return Gate(f"S[{i},{j}]", _maybe_corrupt("S", _par_matrix(n, i, j).T), n, True)


@lru_cache(maxsize=None)
def _x01_matrix(n: int) -> np.ndarray:
    m = np.eye(n + 1)
    m[[0, 1]] = m[[1, 0]]
    return m


def query_flip(n: int) -> Gate:
    """Swap |0> and |1> of the query register, identity elsewhere."""
    return Gate("X01", _x01_matrix(n), n, True)


def query_unitary(n: int, name: str, matrix: np.ndarray) -> Gate:
    return Gate(name, matrix, n, True)


# ----------------------------------------------------------- qubit gates

_H = np.array([[1, 1], [1, -1]]) * _R2
_X = np.array([[0, 1], [1, 0]])
_Z = np.diag([1, -1])


def hadamard(n: int, qubit: int) -> Gate:
    return Gate(f"H[w{qubit}]", _H, n, False, (qubit,))


def x_gate(n: int, qubit: int) -> Gate:
    return Gate(f"X[w{qubit}]", _X, n, False, (qubit,))


def z_gate(n: int, qubit: int) -> Gate:
    return Gate(f"Z[w{qubit}]", _Z, n, False, (qubit,))


def controlled(gate: Gate, qubit: int, value: int) -> Gate:
    """C_value gate: apply `gate` only where `qubit` is |value>."""
    prefix = "C0" if value == 0 else "C1"
    return replace(gate, name=f"{prefix}[w{qubit}]{gate.name}", controls=gate.controls + ((qubit, value),))


def with_controls(gate: Gate, controls: Sequence[tuple[int, int]]) -> Gate:
    for q, v in controls:
        gate = controlled(gate, q, v)
    return gate


@lru_cache(maxsize=None)
def _cnot_q2w(n: int) -> np.ndarray:
    d = 2 * (n + 1)
    m = np.eye(d)
    # rows ordered (query index, qubit); flip qubit when index == 1
    m[[2, 3]] = m[[3, 2]]
    return m


@lru_cache(maxsize=None)
def _cnot_w2q(n: int) -> np.ndarray:
    d = 2 * (n + 1)
    m = np.eye(d)
    # qubit == 1 rows are 2i+1; swap query indices 0 and 1 there
    m[[1, 3]] = m[[3, 1]]
    return m


def cnot_query_qubit(n: int, direction: str, qubit: int) -> Gate:
    """direction 'q2w': flip the qubit iff the query index is 1.
    direction 'w2q': swap query |0> <-> |1> iff the qubit is 1."""
    if direction == "q2w":
        return Gate(f"CNOT[Q->w{qubit}]", _cnot_q2w(n), n, True, (qubit,))
    if direction == "w2q":
        return Gate(f"CNOT[w{qubit}->Q]", _cnot_w2q(n), n, True, (qubit,), binary_query="q1")
    raise ValueError("direction must be 'q2w' or 'w2q'")


def swap_query_qubit(n: int, qubit: int) -> Gate:
    a = _cnot_q2w(n)
    b = _cnot_w2q(n)
    return Gate(f"SWAP[Q,w{qubit}]", a @ b @ a, n, True, (qubit,), binary_query="all")


def multi_controlled_not(n: int, controls: Sequence[tuple[int, int]], target: int | str) -> Gate:
    """Flip `target` (a qubit, or 'query' for |0> <-> |1>) iff all controls match."""
    qs = [q for q, _ in controls]
    if len(set(qs)) != len(qs):
        raise ValueError("controls must be distinct")
    if target == "query":
        base = query_flip(n)
    else:
        if target in qs:
            raise ValueError("target qubit is also a control")
        base = x_gate(n, int(target))
    g = with_controls(base, controls)
    return replace(g, name=f"C^{len(qs)}NOT->{'Q' if target == 'query' else f'w{target}'}")


def classical_gate(n: int, qubits: Sequence[int], perm: Sequence[int], name: str = "PERM") -> Gate:
    """Basis permutation |v> -> |perm[v]> on the listed qubits (first qubit = MSB)."""
    size = 1 << len(qubits)
    if sorted(perm) != list(range(size)):
        raise ValueError("classical_gate needs a permutation")
    m = np.zeros((size, size))
    m[list(perm), list(range(size))] = 1.0
    return Gate(name, m, n, False, tuple(qubits))


def phase_gate(n: int, qubits: Sequence[int], signs: Sequence[int], name: str = "PHASE") -> Gate:
    """Diagonal +-1 on the listed qubits (first qubit = MSB)."""
    d = np.asarray(signs, dtype=float)
    if d.shape != (1 << len(qubits),) or not np.all(np.abs(d) == 1):
        raise ValueError("phase_gate needs one +-1 per basis state")
    return Gate(name, np.diag(d), n, False, tuple(qubits))


# ------------------------------------------------------------------ state


@dataclass(eq=False)
class QState:
    layout: Layout
    amps: np.ndarray
    queries: int = 0
    gate_count: int = 0
    trace: list[tuple[int, str, int]] | None = field(default=None)

    @classmethod
    def zero(cls, layout: Layout, batch: int = 1, trace: bool = False) -> "QState":
        if batch * layout.dim > 8 * layout.cap:
            raise ValueError("batch too large for the configured cap")
        amps = np.zeros((batch, layout.n + 1) + (2,) * layout.w, dtype=complex)
        amps[(slice(None), 0) + (0,) * layout.w] = 1.0
        return cls(layout, amps, trace=[] if trace else None)

    @property
    def batch(self) -> int:
        return self.amps.shape[0]

    def _log(self, name: str) -> None:
        if self.trace is not None:
            self.trace.append((len(self.trace), name, self.queries))

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.amps.reshape(self.batch, -1)) ** 2, axis=1))

    def norm_defect(self) -> float:
        return float(np.max(np.abs(self.norms() - 1.0)))

    def vector(self, b: int = 0) -> np.ndarray:
        return self.amps[b].reshape(-1)

    def apply(self, gate: Gate) -> "QState":
        lay = self.layout
        if gate.n != lay.n:
            raise ValueError(f"gate built for n={gate.n}, state has n={lay.n}")
        for q in gate.qubits + tuple(c for c, _ in gate.controls):
            if not 0 <= q < lay.w:
                raise ValueError(f"qubit {q} outside layout with w={lay.w}")
        bases, offsets, bad = _index_plan(lay.n, lay.w, gate.on_query, gate.qubits, gate.controls, gate.binary_query)
        flat = self.amps.reshape(self.batch, -1)
        if bad is not None and bad.size:
            if max_block_mass(flat, bases, bad) > SUPPORT_TOL:
                raise ValueError(f"{gate.name}: query register has amplitude outside span{{|0>,|1>}}")
        indptr, indices, data = _csr(gate.matrix)
        apply_sparse_gate(flat, bases, offsets, indptr, indices, data)
        self.gate_count += 1
        self._log(gate.name)
        return self


@lru_cache(maxsize=4096)
def _index_plan(
    n: int,
    w: int,
    on_query: bool,
    qubits: tuple[int, ...],
    controls: tuple[tuple[int, int], ...],
    binary_query: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Flat amplitude offsets for one gate.

    A flat index is q * 2^w + sum of bit_j * 2^(w-1-j). Returns the base index
    of every acted block (targets zero, controls matched), the offsets of the
    local basis inside a block, and the local offsets whose query index is >= 2
    (restricted to first qubit = 1 for the "q1" check), or None when unchecked.
    """
    k = len(qubits)
    qbits = np.array([1 << (w - 1 - q) for q in qubits], dtype=np.int64)
    local = np.arange(1 << k)
    wpart = np.zeros(1 << k, dtype=np.int64)
    for j in range(k):
        wpart += ((local >> (k - 1 - j)) & 1) * qbits[j]
    dq = n + 1 if on_query else 1
    qidx = np.repeat(np.arange(dq, dtype=np.int64), 1 << k)
    offsets = qidx * (1 << w) + np.tile(wpart, dq)

    idx = np.arange((n + 1) << w, dtype=np.int64)
    wb = idx & ((1 << w) - 1)
    keep = (idx >> w) == 0 if on_query else np.ones(idx.size, dtype=bool)
    for q in qubits:
        keep &= ((wb >> (w - 1 - q)) & 1) == 0
    for q, v in controls:
        keep &= ((wb >> (w - 1 - q)) & 1) == v
    bad = None
    if binary_query and on_query:
        sel = qidx >= 2
        if binary_query == "q1":
            sel &= ((np.tile(local, dq) >> (k - 1)) & 1) == 1
        bad = offsets[sel]
    bases = np.ascontiguousarray(idx[keep])
    for arr in (bases, offsets) + ((bad,) if bad is not None else ()):
        arr.setflags(write=False)
    return bases, offsets, bad


def _csr(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows, cols = np.nonzero(m)
    indptr = np.zeros(m.shape[0] + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    return np.cumsum(indptr), cols.astype(np.int64), np.ascontiguousarray(m[rows, cols], dtype=complex)


def apply_gate(st: QState, gate: Gate) -> QState:
    return st.apply(gate)


def _oracle_signs(n: int, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != n:
        raise ValueError(f"input must have length n={n}, got {x.shape[1]}")
    signs = np.ones((x.shape[0], n + 1))
    signs[:, 1:] = 1 - 2 * (x & 1)
    return signs


def apply_oracle(st: QState, x: np.ndarray | Sequence[int]) -> QState:
    """O_x |i> = (-1)^{x_i} |i>, |0> fixed. The only thing that counts a query."""
    lay = st.layout
    signs = _oracle_signs(lay.n, np.asarray(x))
    if signs.shape[0] not in (1, st.batch):
        raise ValueError("one input row per batch entry (or a single row)")
    st.amps *= signs.reshape(signs.shape + (1,) * lay.w)
    st.queries += 1
    st.gate_count += 1
    st._log("ORACLE")
    return st


def qubit_probability_one(st: QState, qubit: int) -> np.ndarray:
    idx: list[object] = [slice(None)] * st.amps.ndim
    idx[2 + qubit] = 1
    part = st.amps[tuple(idx)]
    return np.sum(np.abs(part.reshape(st.batch, -1)) ** 2, axis=1)


def qubit_purity_deviation(st: QState, qubit: int) -> np.ndarray:
    p1 = qubit_probability_one(st, qubit)
    return np.minimum(p1, 1.0 - p1)


def measure_qubits(st: QState, qubit: int, strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic readout of one qubit for every batch entry: (bits, deviation).

    With strict=False an impure qubit is not an error; the caller inspects the
    returned deviation instead.
    """
    p1 = qubit_probability_one(st, qubit)
    dev = np.minimum(p1, 1.0 - p1)
    if strict and np.any(dev > PURITY_TOL):
        raise ValueError(f"measurement of w{qubit} is not deterministic (deviation {float(dev.max()):.3g})")
    st._log(f"MEASURE[w{qubit}]")
    return (p1 > 0.5).astype(np.uint8), dev


def measure_qubit(st: QState, qubit: int) -> int:
    bits, _ = measure_qubits(st, qubit)
    if st.batch != 1:
        raise ValueError("measure_qubit is for single states; use measure_qubits")
    return int(bits[0])


def query_distribution(st: QState) -> np.ndarray:
    """Probability of each query-register index, per batch entry."""
    p = np.abs(st.amps) ** 2
    return p.reshape(st.batch, st.layout.n + 1, -1).sum(axis=2)


def write_trace_csv(st: QState, path: str) -> None:
    if st.trace is None:
        raise ValueError("state was created without tracing")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "op", "queries"])
        w.writerows(st.trace)


def all_gate_reports(n: int, w: int = 2) -> list[GateReport]:
    """Every constructor over every index choice at arity n (qubits 0..w-1)."""
    out: list[GateReport] = []
    for i in range(1, n + 1):
        out.append(perm_gate(n, i).report())
    for i in range(n + 1):
        for j in range(n + 1):
            if i != j:
                out.append(par_gate(n, i, j).report())
                out.append(sup_gate(n, i, j).report())
    out.append(query_flip(n).report())
    for q in range(w):
        for d in ("q2w", "w2q"):
            out.append(cnot_query_qubit(n, d, q).report())
        out.append(swap_query_qubit(n, q).report())
        for g in (hadamard(n, q), x_gate(n, q), z_gate(n, q)):
            out.append(g.report())
        other = (q + 1) % w if w > 1 else None
        if other is not None:
            for v in (0, 1):
                out.append(controlled(par_gate(n, 0, n), other, v).report())
                out.append(controlled(perm_gate(n, n), other, v).report())
                out.append(controlled(cnot_query_qubit(n, "q2w", q), other, v).report())
                out.append(multi_controlled_not(n, [(other, v)], q).report())
                out.append(multi_controlled_not(n, [(other, v), (q, 1)], "query").report())
    return out
