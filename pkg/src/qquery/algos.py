"""Exact quantum query algorithms built from qsim primitives.

Every algorithm starts with a Hadamard on w1 (qubit 0) and then runs two
computations side by side, one in the w1=0 branch and one in the w1=1 branch.
A "slot" is one oracle call shared by both branches: each branch prepares the
query register under its own w1 control, the oracle is applied once, and each
branch post-processes. Work-qubit contents are tracked per branch in
`Sim.contents` (variable index, 0 = holds |0>).

All runners accept a batch of inputs (rows of X) and simulate them together.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .classes import GammaSpec, MainThmSpec, SpecError
from .qsim import (
    PURITY_TOL,
    Layout,
    QState,
    apply_oracle,
    classical_gate,
    cnot_query_qubit,
    hadamard,
    measure_qubits,
    multi_controlled_not,
    par_gate,
    perm_gate,
    phase_gate,
    query_flip,
    sup_gate,
    swap_query_qubit,
    with_controls,
    x_gate,
    z_gate,
)

BRANCH = 0  # qubit index of w1


@dataclass(frozen=True)
class RunTrace:
    output: int
    queries: int
    final_state_purity: float
    gate_count: int


@dataclass
class BatchTrace:
    outputs: np.ndarray
    queries: int
    purity: np.ndarray
    gate_count: int
    state: QState

    def row(self, i: int = 0) -> RunTrace:
        return RunTrace(int(self.outputs[i]), self.queries, float(self.purity[i]), self.gate_count)


class Sim:
    def __init__(self, n: int, w: int, X: np.ndarray | Sequence[int], trace: bool = False) -> None:
        X = np.asarray(X, dtype=np.uint8)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != n:
            raise ValueError(f"input length {X.shape[1]} != n = {n}")
        self.n = n
        self.X = X
        self.st = QState.zero(Layout(n, w), batch=X.shape[0], trace=trace)
        self.contents: dict[int, list[int]] = {q: [0, 0] for q in range(1, w)}
        self.query_holds = [0, 0]

    def gate(self, g, controls: Sequence[tuple[int, int]] = ()) -> None:
        self.st.apply(with_controls(g, controls))

    def oracle(self) -> None:
        apply_oracle(self.st, self.X)

    def value(self, var: int) -> np.ndarray:
        """Classical value of x_var for every batch row (x_0 := 0)."""
        if var == 0:
            return np.zeros(self.X.shape[0], dtype=np.uint8)
        return self.X[:, var - 1]


# ------------------------------------------------------------ branch actions


class Action:
    """One branch's share of a slot: gates before and after the oracle."""

    def pre(self, sim: Sim, b: int) -> None:
        raise NotImplementedError

    def post(self, sim: Sim, b: int) -> None:
        raise NotImplementedError


@dataclass
class Load(Action):
    """Read x_var into an empty work qubit."""

    var: int
    qubit: int

    def pre(self, sim: Sim, b: int) -> None:
        if sim.contents[self.qubit][b]:
            raise RuntimeError(f"w{self.qubit} not empty in branch {b}")
        sim.gate(sup_gate(sim.n, 0, self.var), [(BRANCH, b)])

    def post(self, sim: Sim, b: int) -> None:
        n, c = sim.n, [(BRANCH, b)]
        sim.gate(par_gate(n, 0, self.var), c)
        sim.gate(cnot_query_qubit(n, "q2w", self.qubit), c)
        sim.gate(cnot_query_qubit(n, "w2q", self.qubit), c)
        sim.contents[self.qubit][b] = self.var


@dataclass
class Phase(Action):
    """Multiply the branch by (-1)^(x_var * prod of the condition qubits)."""

    var: int
    conds: tuple[int, ...] = ()

    def _flip(self, sim: Sim, b: int) -> None:
        ctrl = [(BRANCH, b)] + [(q, 1) for q in self.conds]
        sim.gate(multi_controlled_not(sim.n, ctrl, "query"))

    def pre(self, sim: Sim, b: int) -> None:
        self._flip(sim, b)
        sim.gate(perm_gate(sim.n, self.var), [(BRANCH, b)])

    def post(self, sim: Sim, b: int) -> None:
        sim.gate(perm_gate(sim.n, self.var), [(BRANCH, b)])
        self._flip(sim, b)


@dataclass
class Convert(Action):
    """Replace x_src held in `qubit` by x_dst with one query (dst=0 erases)."""

    qubit: int
    src: int
    dst: int

    def pre(self, sim: Sim, b: int) -> None:
        if sim.contents[self.qubit][b] != self.src:
            raise RuntimeError(f"w{self.qubit} does not hold x{self.src} in branch {b}")
        n, c = sim.n, [(BRANCH, b)]
        sim.gate(cnot_query_qubit(n, "w2q", self.qubit), c)
        sim.gate(cnot_query_qubit(n, "q2w", self.qubit), c)
        sim.gate(sup_gate(n, self.dst, self.src), c)

    def post(self, sim: Sim, b: int) -> None:
        n, c = sim.n, [(BRANCH, b)]
        sim.gate(par_gate(n, self.dst, self.src), c)
        sim.gate(cnot_query_qubit(n, "q2w", self.qubit), c)
        sim.gate(cnot_query_qubit(n, "w2q", self.qubit), c)
        sim.gate(z_gate(n, self.qubit), c)
        sim.contents[self.qubit][b] = self.dst


def slot(sim: Sim, actions: dict[int, Action]) -> None:
    for b, act in sorted(actions.items()):
        act.pre(sim, b)
    sim.oracle()
    for b, act in sorted(actions.items()):
        act.post(sim, b)


# ----------------------------------------------------------------- untangle


def _untangle_gates(sim: Sim, a: int, b: int, c: int, d: int, w: int | None) -> None:
    n = sim.n
    if a == d or b == c:
        raise ValueError("untangle needs a != d and b != c")
    if w is not None:
        sim.gate(query_flip(n), [(BRANCH, 0), (w, 1)])
    sim.gate(sup_gate(n, d, a), [(BRANCH, 0)])
    if w is not None:
        sim.gate(query_flip(n), [(BRANCH, 1), (w, 1)])
    sim.gate(sup_gate(n, b, c), [(BRANCH, 1)])
    sim.oracle()
    sim.gate(par_gate(n, a, d), [(BRANCH, 0)])
    sim.gate(par_gate(n, b, c), [(BRANCH, 1)])
    if w is not None:
        sim.gate(cnot_query_qubit(n, "q2w", w), [(BRANCH, 0)])
        sim.gate(cnot_query_qubit(n, "w2q", w))


def _branch_mass(st: QState, b: int, qidx: np.ndarray, w: int | None, wval: np.ndarray) -> np.ndarray:
    """Probability, per batch row, of branch b with query = qidx and w = wval."""
    out = np.zeros(st.batch)
    for row in range(st.batch):
        idx: list[object] = [row, int(qidx[row])] + [slice(None)] * st.layout.w
        idx[2 + BRANCH] = b
        if w is not None:
            idx[2 + w] = int(wval[row])
        out[row] = np.sum(np.abs(st.amps[tuple(idx)]) ** 2)
    return out


def check_untangle_shape(sim: Sim, a: int, b: int, c: int, d: int, w: int | None, tol: float = 1e-9) -> None:
    """The state must be (|x_a>|0>|x_b> W1 + |x_c>|1>|x_d> W2)/sqrt2."""
    zero = np.zeros(sim.X.shape[0], dtype=np.uint8)
    m0 = _branch_mass(sim.st, 0, sim.value(a), w, sim.value(b) if w is not None else zero)
    m1 = _branch_mass(sim.st, 1, sim.value(c), w, sim.value(d) if w is not None else zero)
    if np.any(np.abs(m0 - 0.5) > tol) or np.any(np.abs(m1 - 0.5) > tol):
        raise ValueError("untangle precondition violated: state is not in the required two-branch shape")


def untangle_step(sim: Sim, a: int, b: int, c: int, d: int, w: int | None = 1, check: bool = True) -> None:
    """One query: branch 0 (Q=x_a, w=x_b), branch 1 (Q=x_c, w=x_d) -> both (Q=x_b, w=x_d).

    Variable index 0 stands for the constant 0. w=None means b=d=0 with no
    qubit behind it: the step then just clears x_a / x_c from the query register.
    """
    if w is None and (b or d):
        raise ValueError("w=None requires b = d = 0")
    if check:
        check_untangle_shape(sim, a, b, c, d, w)
    _untangle_gates(sim, a, b, c, d, w)
    sim.query_holds = [b, b]
    if w is not None:
        sim.contents[w] = [d, d]


def untangle_s(sim: Sim, pairs: Sequence[tuple[int | None, int | None]], check: bool = False) -> None:
    """Untangle each (qa, qb) pair with one query.

    qa's contents are swapped into the query register (a/c roles), qb keeps the
    b/d roles. Afterwards qa holds the branch-0 value of qb and qb holds the
    branch-1 value, in both branches. qa=None uses the constant 0 for a/c and
    leaves x_b in the query register; qb=None erases qa.
    """
    n = sim.n
    for qa, qb in pairs:
        if sim.query_holds != [0, 0]:
            raise RuntimeError("query register must be |0> before an untangle step")
        a, c = sim.contents[qa] if qa is not None else (0, 0)
        b, d = sim.contents[qb] if qb is not None else (0, 0)
        if qa is not None:
            sim.gate(swap_query_qubit(n, qa))
            sim.contents[qa] = [0, 0]
            sim.query_holds = [a, c]
        untangle_step(sim, a, b, c, d, qb, check=check)
        if qa is not None:
            sim.gate(swap_query_qubit(n, qa))
            sim.contents[qa] = [b, b]
            sim.query_holds = [0, 0]


def _finish(sim: Sim, extra_qubits: Sequence[int] = ()) -> tuple[np.ndarray, np.ndarray, dict[int, np.ndarray]]:
    bits, dev = measure_qubits(sim.st, BRANCH, strict=False)
    carried: dict[int, np.ndarray] = {}
    for q in extra_qubits:
        qb, qd = measure_qubits(sim.st, q, strict=False)
        carried[q] = qb
        dev = np.maximum(dev, qd)
    return bits, dev, carried


def _batch(sim: Sim, outputs: np.ndarray, dev: np.ndarray) -> BatchTrace:
    return BatchTrace(outputs.astype(np.uint8), sim.st.queries, dev, sim.st.gate_count, sim.st)


CHUNK_AMPS = 1 << 21


def _chunked(n: int, w: int, X: np.ndarray | Sequence[int], body: Callable[[np.ndarray], BatchTrace]) -> BatchTrace:
    """Run `body` on row blocks small enough that batch * dim stays under CHUNK_AMPS."""
    X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
    rows = max(1, CHUNK_AMPS // ((n + 1) << w))
    if X.shape[0] <= rows:
        return body(X)
    parts = [body(X[i : i + rows]) for i in range(0, X.shape[0], rows)]
    if len({(p.queries, p.gate_count) for p in parts}) != 1:
        raise RuntimeError("gate sequence depends on the input block")
    return BatchTrace(
        np.concatenate([p.outputs for p in parts]),
        parts[0].queries,
        np.concatenate([p.purity for p in parts]),
        parts[0].gate_count,
        parts[-1].state,
    )


# -------------------------------------------------- acq / final monomial


def acq(sim: Sim, i: int, k: int) -> None:
    """Store x_i (branch 0) and x_{k+i} (branch 1) in work qubit i; one query."""
    slot(sim, {0: Load(i, i), 1: Load(k + i, i)})


def final_monomial_phase(
    sim: Sim,
    mono0: tuple[int, Sequence[int]] | None,
    mono1: tuple[int, Sequence[int]] | None,
) -> None:
    """Each monomial is (queried variable, qubits holding the other factors)."""
    acts: dict[int, Action] = {}
    if mono0 is not None:
        acts[0] = Phase(mono0[0], tuple(mono0[1]))
    if mono1 is not None:
        acts[1] = Phase(mono1[0], tuple(mono1[1]))
    slot(sim, acts)


def acq1(sim: Sim, i: int, k: int, l: int) -> None:  # noqa: E741
    """Two queries: phases x_{i+1}x_{k+i+1} / x_{l+i+1}x_{l+k+i+1}; stores x_{i+1} / x_{l+i+1}."""
    q = i + 1
    slot(sim, {0: Load(i + 1, q), 1: Load(l + i + 1, q)})
    slot(sim, {0: Phase(k + i + 1, (q,)), 1: Phase(l + k + i + 1, (q,))})


# ------------------------------------------------------------ pdsp runners


def _require_2mod4(n: int) -> None:
    if n % 4 != 2 or n < 6:
        raise SpecError(f"requires n ≡ 2 mod 4 and n >= 6, got n={n}")


def algorithm1_budget(n: int) -> int:
    return 3 * n // 4


def _pdsp_core(
    sim: Sim,
    n: int,
    mono1: tuple[int, Sequence[int]],
    carry_first: bool,
) -> list[int]:
    """Shared skeleton: k-1 acq, one final-monomial query, untangle of k-1 qubits.

    Returns the qubits that end up holding x_{k+1} .. x_{floor(3n/4)} in both
    branches when carry_first is set (the carry-over choice).
    """
    k = n // 2
    store = list(range(1, k))
    sim.gate(hadamard(n, BRANCH))
    for i in store:
        acq(sim, i, k)
    final_monomial_phase(sim, (k, store), mono1)
    return _untangle_half(sim, store, carry_first)


def _untangle_half(sim: Sim, store: list[int], carry_first: bool) -> list[int]:
    half = len(store) // 2
    if carry_first:
        qb, qa = store[:half], store[half:]
    else:
        qa, qb = store[:half], store[half:]
    untangle_s(sim, list(zip(qa, qb)))
    return qb


def algorithm1_batch(n: int, X: np.ndarray, trace: bool = False) -> BatchTrace:
    """f1 = x1...x_{n/2} + x_{n/2+1}...x_n with floor(3n/4) queries."""
    _require_2mod4(n)
    return _chunked(n, n // 2, X, lambda Xc: _algorithm1(n, Xc, trace))


def _algorithm1(n: int, X: np.ndarray, trace: bool) -> BatchTrace:
    k = n // 2
    sim = Sim(n, k, X, trace)
    _pdsp_core(sim, n, (n, list(range(1, k))), carry_first=False)
    sim.gate(hadamard(n, BRANCH))
    out, dev, _ = _finish(sim)
    return _batch(sim, out, dev)


def cor2_batch(n: int, X: np.ndarray, trace: bool = False) -> BatchTrace:
    """f2 = x1...x_{floor(3n/4)} + x_{n/2+1}...x_n with floor(3n/4) queries."""
    _require_2mod4(n)
    return _chunked(n, n // 2, X, lambda Xc: _cor2(n, Xc, trace))


def _cor2(n: int, X: np.ndarray, trace: bool) -> BatchTrace:
    k = n // 2
    sim = Sim(n, k, X, trace)
    carried = _pdsp_core(sim, n, (n, list(range(1, k))), carry_first=True)
    expect = list(range(k + 1, 3 * n // 4 + 1))
    if [sim.contents[q][1] for q in carried] != expect:
        raise RuntimeError("carry-over bookkeeping mismatch")
    sim.gate(hadamard(n, BRANCH))
    out, dev, vals = _finish(sim, carried)
    prod = np.ones_like(out)
    for q in carried:
        prod &= vals[q]
    return _batch(sim, out & prod, dev)


def main_thm_batch(spec: MainThmSpec, X: np.ndarray, trace: bool = False) -> BatchTrace:
    spec.validate()
    _require_2mod4(spec.n)
    return _chunked(spec.n, spec.n // 2 + 2, X, lambda Xc: _main_thm(spec, Xc, trace))


def _main_thm(spec: MainThmSpec, X: np.ndarray, trace: bool) -> BatchTrace:
    n = spec.n
    k = n // 2
    # qubits: 0 = w1, 1..k-1 storage, k idle, k+1 the |-> ancilla
    anc = k + 1
    sim = Sim(n, k + 2, X, trace)
    sim.gate(x_gate(n, anc))
    sim.gate(hadamard(n, anc))
    store = list(range(1, k))

    def holder(v: int) -> int:
        return v - k  # branch 1 stores x_{k+j} in qubit j

    m1 = next(b for b in spec.g_partition if n in b)
    others = [b for b in spec.g_partition if n not in b]
    sim.gate(hadamard(n, BRANCH))
    for i in store:
        acq(sim, i, k)
    final_monomial_phase(sim, (k, store), (n, [holder(v) for v in m1 if v != n]))
    for mono in others:
        ctrl = [(BRANCH, 1)] + [(holder(v), 1) for v in mono]
        sim.gate(multi_controlled_not(n, ctrl, anc))
    carried = _untangle_half(sim, store, carry_first=True)
    sim.gate(hadamard(n, BRANCH))
    out, dev, vals = _finish(sim, carried)
    prod = np.ones_like(out)
    for q in carried:
        prod &= vals[q]
    return _batch(sim, out & prod, dev)


# -------------------------------------------------------------- MM runners


def f_id_budget(n: int) -> int:
    return -(-5 * n // 8)


def _pair_up(qubits: Sequence[int]) -> list[tuple[int | None, int | None]]:
    pairs: list[tuple[int | None, int | None]] = [(qubits[i], qubits[i + 1]) for i in range(0, len(qubits) - 1, 2)]
    if len(qubits) % 2:
        pairs.append((qubits[-1], None))
    return pairs


def f_id_batch(n: int, X: np.ndarray, trace: bool = False) -> BatchTrace:
    if n < 4 or n % 2:
        raise SpecError(f"f_id runner needs even n >= 4, got n={n}")
    return _chunked(n, _f_id_width(n), X, lambda Xc: _f_id(n, Xc, trace))


def _f_id_width(n: int) -> int:
    k = n // 2
    return 1 + k // 2 + k % 2


def _f_id(n: int, X: np.ndarray, trace: bool) -> BatchTrace:
    k = n // 2
    l = k // 2  # noqa: E741 - monomials per branch handled by acq1
    odd = k % 2 == 1
    w = _f_id_width(n)
    sim = Sim(n, w, X, trace)
    sim.gate(hadamard(n, BRANCH))
    for i in range(l):
        acq1(sim, i, k, l)
    if odd:
        # the leftover monomial x_k x_n: store both factors, carry them through
        last = l + 1
        slot(sim, {0: Load(k, last), 1: Load(n, last)})
        pairs = [(1, last)] + _pair_up(list(range(2, l + 1)))
    else:
        pairs = _pair_up(list(range(1, l + 1)))
    untangle_s(sim, pairs)
    sim.gate(hadamard(n, BRANCH))
    if odd:
        if sim.contents[1] != [k, k] or sim.contents[l + 1] != [n, n]:
            raise RuntimeError("carry-over bookkeeping mismatch")
        sim.gate(multi_controlled_not(n, [(1, 1), (l + 1, 1)], BRANCH))
    out, dev, _ = _finish(sim)
    return _batch(sim, out, dev)


def _bits_to_int(bits: Sequence[int]) -> int:
    return sum(int(v) << i for i, v in enumerate(bits))


def _qubit_function_gate(
    sim: Sim,
    inputs: Sequence[int],
    outputs: Sequence[int],
    fn: Callable[[tuple[int, ...]], tuple[int, ...]],
    controls: Sequence[tuple[int, int]],
    name: str,
) -> None:
    """|in>|out> -> |in>|out XOR fn(in)> as one permutation gate."""
    qubits = list(inputs) + list(outputs)
    m = len(qubits)
    perm = []
    for v in range(1 << m):
        bits = [(v >> (m - 1 - j)) & 1 for j in range(m)]
        vin = tuple(bits[: len(inputs)])
        delta = fn(vin)
        new = bits[: len(inputs)] + [o ^ dlt for o, dlt in zip(bits[len(inputs):], delta)]
        perm.append(sum(bit << (m - 1 - j) for j, bit in enumerate(new)))
    sim.gate(classical_gate(sim.n, qubits, perm, name), controls)


def _pattern(sim: Sim, b: int, u: Sequence[int], h: Sequence[int], block: Sequence[int], phi: Sequence[int]) -> None:
    """XOR phi(block) into the h qubits, reading block values from u (branch b)."""
    pos = {sim.contents[q][b]: j for j, q in enumerate(u)}
    order = [pos[v] for v in block]
    width = len(block)

    def fn(vin: tuple[int, ...]) -> tuple[int, ...]:
        val = phi[_bits_to_int([vin[j] for j in order])]
        return tuple((val >> t) & 1 for t in range(width))

    _qubit_function_gate(sim, u, h[:width], fn, [(BRANCH, b)], f"PHI{b + 1}")


def _g_phase(sim: Sim, spec: GammaSpec, b: int) -> None:
    where = {}
    for q, cont in sim.contents.items():
        if cont[b]:
            where[cont[b]] = q
    missing = [v for v in spec.x_prime if v not in where]
    if missing:
        raise RuntimeError(f"branch {b} does not hold x' variables {missing}")
    qubits = [where[v] for v in spec.x_prime]
    g = spec.g_bits()
    m = len(qubits)
    signs = []
    for v in range(1 << m):
        bits = [(v >> (m - 1 - j)) & 1 for j in range(m)]
        signs.append(-1 if g[_bits_to_int(bits)] else 1)
    sim.gate(phase_gate(sim.n, qubits, signs, "G"), [(BRANCH, b)])


def _align(sim: Sim, qubits: Sequence[int]) -> None:
    """Controlled swaps in branch 1 so shared variables sit where branch 0 has them."""
    swap2 = [0, 2, 1, 3]
    for q in qubits:
        v = sim.contents[q][0]
        if v == 0 or sim.contents[q][1] == v:
            continue
        other = next((r for r in qubits if sim.contents[r][1] == v), None)
        if other is None:
            continue
        sim.gate(classical_gate(sim.n, [q, other], swap2, "SWAP"), [(BRANCH, 1)])
        sim.contents[q][1], sim.contents[other][1] = sim.contents[other][1], sim.contents[q][1]


@dataclass
class _Step:
    action: Action | None = None
    free: Callable[[], None] | None = None


def _run_schedule(sim: Sim, plans: dict[int, list[_Step]]) -> None:
    """Merge two branch plans into slots; free ops run as soon as reached."""
    cursors = {b: 0 for b in plans}
    while True:
        acts: dict[int, Action] = {}
        for b, plan in plans.items():
            while cursors[b] < len(plan) and plan[cursors[b]].action is None:
                step = plan[cursors[b]]
                assert step.free is not None
                step.free()
                cursors[b] += 1
            if cursors[b] < len(plan):
                acts[b] = plan[cursors[b]].action  # type: ignore[assignment]
                cursors[b] += 1
        if not acts:
            return
        slot(sim, acts)


def gamma_budget(n: int) -> int:
    return f_id_budget(n)


def _gamma_core(sim: Sim, spec: GammaSpec) -> tuple[list[int], bool]:
    """Everything up to (not including) the final Hadamard.

    Returns the qubits holding x' at the end and whether g still has to be
    added classically (True) or was already applied as a branch phase.
    """
    n_even = spec.n
    a, b = spec.a, spec.b
    u = list(range(1, b + 1))
    h = list(range(b + 1, 2 * b + 1))
    xp = set(spec.x_prime)
    y_order = [v for v in spec.y_hat if v in xp] + [v for v in spec.y_hat if v not in xp]
    z_first = [v for v in spec.z_hat if v in xp] + [v for v in spec.z_hat if v not in xp]

    plan0: list[_Step] = []
    plan1: list[_Step] = []
    p0 = lambda: _pattern(sim, 0, u[:a], h, spec.y_hat, spec.phi1)  # noqa: E731
    p1 = lambda: _pattern(sim, 1, u, h, spec.z_hat, spec.phi2)  # noqa: E731

    g_at_end = True
    if a == b:
        z_order = z_first
    else:
        zx = [v for v in spec.z_hat if v in xp]
        if len(zx) > 2:
            raise SpecError("this runner supports at most 2 x' variables from z_hat when n ≡ 2 mod 4")
        p_1, p_2 = z_first[0], z_first[1]
        # branch 1 keeps p_1 in u_b so branch 0 can load it straight there
        z_order = [v for v in spec.z_hat if v != p_1] + [p_1]
        g_at_end = False

    for t, v in enumerate(y_order):
        plan0.append(_Step(Load(v, u[t])))
    plan0.append(_Step(free=p0))
    for t, v in enumerate(spec.y_tilde):
        plan0.append(_Step(Phase(v, (h[t],))))
    plan0.append(_Step(free=p0))

    for t, v in enumerate(z_order):
        plan1.append(_Step(Load(v, u[t])))
    plan1.append(_Step(free=p1))
    for t, v in enumerate(spec.z_tilde):
        plan1.append(_Step(Phase(v, (h[t],))))
    plan1.append(_Step(free=p1))

    if a != b:
        g_now = lambda: _g_phase(sim, spec, 0) if spec.x_prime else None  # noqa: E731
        plan0.append(_Step(Load(p_1, u[b - 1])))
        if b % 2 == 1:
            plan0.append(_Step(Load(p_2, h[0])))
            plan0.append(_Step(free=g_now))
        else:
            zx_count = sum(1 for v in spec.z_hat if v in xp)
            free_y = [t for t in range(a) if y_order[t] not in xp]
            if zx_count <= 1:
                plan0.append(_Step(free=g_now))
                t = free_y[-1] if free_y else a - 1
                plan0.append(_Step(Convert(u[t], y_order[t], p_2)))
            else:
                if not free_y:
                    raise SpecError("this runner needs a y_hat variable outside x' when x' has 2 z_hat variables")
                t = free_y[-1]
                plan0.append(_Step(Convert(u[t], y_order[t], p_2)))
                plan0.append(_Step(free=g_now))

    _run_schedule(sim, {0: plan0, 1: plan1})
    _align(sim, u + h)

    diff = [q for q in u + h if sim.contents[q][0] != sim.contents[q][1]]
    if g_at_end:
        # carry x' through: x' positions take the qb role
        half = -(-len(diff) // 2)
        qb = diff[:half]
        qa: list[int | None] = list(diff[half:])
        spare = [q for q in h if sim.contents[q] == [0, 0]]
        while len(qa) < len(qb):
            qa.append(spare.pop(0))
        untangle_s(sim, list(zip(qa, qb)))
    else:
        untangle_s(sim, _pair_up(diff))

    holders = []
    if g_at_end and spec.x_prime:
        where = {sim.contents[q][0]: q for q in sim.contents if sim.contents[q][0] == sim.contents[q][1]}
        missing = [v for v in spec.x_prime if v not in where]
        if missing:
            raise RuntimeError(f"x' variables {missing} were not carried")
        holders = [where[v] for v in spec.x_prime]
    for q, (c0, c1) in sim.contents.items():
        if c0 != c1:
            raise RuntimeError(f"w{q} still differs between branches")
    return holders, g_at_end


def _gamma_layout_w(spec: GammaSpec) -> int:
    return 1 + 2 * spec.b


def gamma_batch(spec: GammaSpec, X: np.ndarray, trace: bool = False, extra_var: int | None = None) -> BatchTrace:
    spec.validate()
    n_total = spec.n + (1 if extra_var is not None else 0)
    w = _gamma_layout_w(spec)
    return _chunked(n_total, w, X, lambda Xc: _gamma(spec, Xc, trace, extra_var))


def _gamma(spec: GammaSpec, X: np.ndarray, trace: bool, extra_var: int | None) -> BatchTrace:
    n_total = spec.n + (1 if extra_var is not None else 0)
    sim = Sim(n_total, _gamma_layout_w(spec), X, trace)
    sim.gate(hadamard(n_total, BRANCH))
    holders, g_at_end = _gamma_core(sim, spec)
    if extra_var is not None:
        slot(sim, {0: Phase(extra_var)})
    sim.gate(hadamard(n_total, BRANCH))
    if g_at_end and spec.x_prime:
        g = spec.g_bits()
        _qubit_function_gate(
            sim, holders, [BRANCH], lambda vin: (int(g[_bits_to_int(vin)]),), [], "G"
        )
    out, dev, _ = _finish(sim)
    return _batch(sim, out, dev)


def gamma_odd_batch(spec: GammaSpec, X: np.ndarray, trace: bool = False) -> BatchTrace:
    """f(x_1..x_{n-1}) + x_n for an even-arity Gamma spec; one extra query."""
    return gamma_batch(spec, X, trace, extra_var=spec.n + 1)


def gamma_odd_budget(n_total: int) -> int:
    return gamma_budget(n_total - 1) + 1


# --------------------------------------------------------- single-input API


def _single(batch: BatchTrace) -> RunTrace:
    tr = batch.row(0)
    if tr.final_state_purity > PURITY_TOL:
        raise ValueError(f"final measurement is not deterministic (deviation {tr.final_state_purity:.3g})")
    return tr


def run_algorithm1(n: int, x: Sequence[int]) -> RunTrace:
    return _single(algorithm1_batch(n, np.asarray(x)))


def run_cor2(n: int, x: Sequence[int]) -> RunTrace:
    return _single(cor2_batch(n, np.asarray(x)))


def run_main_thm(spec: MainThmSpec, x: Sequence[int]) -> RunTrace:
    return _single(main_thm_batch(spec, np.asarray(x)))


def run_f_id(n: int, x: Sequence[int]) -> RunTrace:
    return _single(f_id_batch(n, np.asarray(x)))


def run_gamma(spec: GammaSpec, x: Sequence[int]) -> RunTrace:
    return _single(gamma_batch(spec, np.asarray(x)))


def run_gamma_odd(spec: GammaSpec, x: Sequence[int]) -> RunTrace:
    return _single(gamma_odd_batch(spec, np.asarray(x)))


def budget_formula(algo: str, n: int) -> int:
    if algo in ("algorithm1", "cor2", "main"):
        return 3 * n // 4
    if algo in ("f_id", "gamma"):
        return f_id_budget(n)
    if algo == "gamma_odd":
        return gamma_odd_budget(n)
    raise ValueError(f"unknown algorithm {algo!r}")

