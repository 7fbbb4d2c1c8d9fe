"""Acceptance criteria 1-9. Each test carries @pytest.mark.criterion(N); the
terminal summary prints one PASS/FAIL line per criterion."""

import itertools
import math
import time

import numpy as np
import pytest

from qquery import algos
from qquery.boolfn import (
    TruthTable,
    all_inputs,
    anf_to_truth_table,
    granularity,
    max_granularity,
    parse_anf,
    real_poly_degree,
    walsh_coefficient,
)
from qquery.classes import (
    MainThmSpec,
    count_gamma_raw,
    count_main_thm_functions,
    feasible_main_partitions,
    make_main_thm_function,
    make_pdsp,
    random_gamma_spec,
    random_pdsp,
)
from qquery.classical import (
    brute_force_D,
    brute_force_Dplus,
    dplus_lower_bound,
    fact1_chain,
    pdsp_parity_tree,
)
from qquery.harness import Problem, verify
from qquery.qsim import UNITARY_TOL, all_gate_reports

from . import oracles
from .test_algos import fidelity, untangle_case


def exhaustive(batch, fn, n):
    X = all_inputs(n)
    expect = np.array([fn(tuple(int(v) for v in x)) for x in X], dtype=np.uint8)
    return np.array_equal(batch.outputs, expect) and batch.purity.max() <= algos.PURITY_TOL


# ----------------------------------------------------------------------- 1


@pytest.mark.criterion(1)
def test_c1_untangle_fidelity(rng):
    start = time.perf_counter()
    sim, want = untangle_case(rng, 50)
    elapsed = time.perf_counter() - start
    f = fidelity(sim.st.amps, want)
    print(f"\n[c1] 800 cases, min fidelity {f.min():.16f}, queries {sim.st.queries}, {elapsed:.3f}s")
    assert len(f) == 16 * 50
    assert f.min() >= 1 - 1e-12
    assert sim.st.queries == 1
    assert elapsed < 1.0


# ----------------------------------------------------------------------- 2


@pytest.mark.criterion(2)
@pytest.mark.parametrize("n, q", [(6, 4), (10, 7), (14, 10)])
def test_c2_algorithm1_exact(n, q):
    start = time.perf_counter()
    batch = algos.algorithm1_batch(n, all_inputs(n))
    elapsed = time.perf_counter() - start
    print(f"\n[c2] n={n}: {batch.queries} queries, {elapsed:.2f}s")
    assert exhaustive(batch, oracles.f1, n)
    assert batch.queries == q == 3 * n // 4
    if n == 14:
        assert elapsed < 30.0


# ----------------------------------------------------------------------- 3


def _main_oracle(spec):
    def f(x):
        g = 0
        for block in spec.g_partition:
            g ^= oracles.prod(x[v - 1] for v in block)
        return (oracles.prod(x[: spec.k]) ^ g) & oracles.prod(x[v - 1] for v in spec.product_vars)

    return f


def _main_instances():
    yield MainThmSpec(10, 1, ((8, 9, 10),))
    for t in (1, 2):
        yield from feasible_main_partitions(14, t)


@pytest.mark.criterion(3)
@pytest.mark.parametrize("spec", list(_main_instances()), ids=lambda s: f"n{s.n}-t{s.t}")
def test_c3_main_family(spec):
    n, t = spec.n, spec.t
    tt, ps = make_main_thm_function(spec)
    batch = algos.main_thm_batch(spec, all_inputs(n))
    assert exhaustive(batch, _main_oracle(spec), n)
    assert batch.queries == 3 * n // 4
    assert dplus_lower_bound(tt) == n - t
    costs = {pdsp_parity_tree(ps, x).queries for x in all_inputs(n)}
    assert costs == {n - t}
    assert real_poly_degree(tt) == n


@pytest.mark.criterion(3)
def test_c3_n14_partition_sets():
    # g lives on x11..x14: one block of 4 for t = 1; two blocks of size >= 3 cannot fit in 4 variables
    assert [s.g_partition for s in feasible_main_partitions(14, 1)] == [((11, 12, 13, 14),)]
    assert feasible_main_partitions(14, 2) == []


@pytest.mark.criterion(3)
def test_c3_t2_at_smallest_feasible_n_sampled():
    """t = 2 first becomes feasible at n = 22; full sweep is out of reach, so sample."""
    spec = feasible_main_partitions(22, 2)[0]
    n, t = spec.n, spec.t
    tt, ps = make_main_thm_function(spec)
    assert dplus_lower_bound(tt) == n - t
    assert real_poly_degree(tt) == n
    rng = np.random.default_rng(22)
    X = rng.integers(0, 2, size=(44, n)).astype(np.uint8)
    X[::2, spec.k : 3 * n // 4] = 1  # half the rows with the product factor switched on
    batch = algos.main_thm_batch(spec, X)
    f = _main_oracle(spec)
    assert batch.outputs.tolist() == [f(tuple(int(v) for v in x)) for x in X]
    assert batch.outputs.any() and not batch.outputs.all()
    assert batch.queries == 3 * n // 4
    assert {pdsp_parity_tree(ps, x).queries for x in X} == {n - t}


# ----------------------------------------------------------------------- 4


@pytest.mark.criterion(4)
def test_c4_pdsp_granularity():
    rng = np.random.default_rng(4)
    shapes = [(n, q) for n in range(4, 13) for q in range(1, 4) if q * q <= n]
    picked = [shapes[i] for i in rng.choice(len(shapes), size=20, replace=True)]
    for n, q in picked:
        spec = random_pdsp(rng, n, q)
        tt = make_pdsp(spec)
        assert granularity(walsh_coefficient(tt, 0)) == n - q, spec
        assert max_granularity(tt) == n - q, spec
        assert oracles.gran(oracles.walsh(tt.bits.tolist(), n, 0)) == n - q


# ----------------------------------------------------------------------- 5


@pytest.mark.criterion(5)
def test_c5_mm_runners():
    start = time.perf_counter()
    for n, q in [(4, 3), (6, 4), (8, 5), (10, 7), (12, 8)]:
        batch = algos.f_id_batch(n, all_inputs(n))
        assert exhaustive(batch, oracles.f_id, n), n
        assert batch.queries == q == math.ceil(5 * n / 8)
    assert algos.f_id_batch(6, all_inputs(6)).queries == 4
    for n in (8, 12):
        for seed in range(5):
            spec = random_gamma_spec(n, seed)
            batch = algos.gamma_batch(spec, all_inputs(n))
            assert exhaustive(batch, lambda x: oracles.gamma(spec, x), n), (n, seed)
            assert batch.queries == math.ceil(5 * n / 8)
    even = random_gamma_spec(8, 0)
    batch = algos.gamma_odd_batch(even, all_inputs(9))
    assert exhaustive(batch, lambda x: oracles.gamma(even, x[:8]) ^ x[8], 9)
    assert batch.queries == 6
    elapsed = time.perf_counter() - start
    print(f"\n[c5] {elapsed:.2f}s")
    assert elapsed < 60.0


# ----------------------------------------------------------------------- 6


@pytest.mark.criterion(6)
def test_c6_brute_force_concordance():
    start = time.perf_counter()
    tt = anf_to_truth_table(parse_anf("x1*x2 + x3*x4"))
    assert brute_force_Dplus(tt) == 3 == dplus_lower_bound(tt)
    assert brute_force_D(tt) == 4 == real_poly_degree(tt)
    assert oracles.decision_depth(tt.bits.tolist(), 4) == 4
    rng = np.random.default_rng(6)
    for _ in range(200):
        f = TruthTable(4, rng.integers(0, 2, size=16).astype(np.uint8))
        lb, dplus, d = fact1_chain(f)
        assert lb <= dplus <= d
    assert time.perf_counter() - start < 10.0


# ----------------------------------------------------------------------- 7


@pytest.mark.criterion(7)
def test_c7_counting():
    assert [count_main_thm_functions(n) for n in (16, 36, 40)] == [1, 3, 4]
    assert count_gamma_raw(8)[0] == 37_748_736


@pytest.mark.criterion(7)
def test_c7_counts_match_enumeration():
    # independent route: list block-size compositions of the ceil(n/4) g variables
    # into t ordered parts of size >= t+2, which is what the closed form counts
    def brute(n):
        c, total = math.ceil(n / 4), 0
        for t in range(1, c + 1):
            total += sum(
                1
                for sizes in itertools.product(range(t + 2, c + 1), repeat=t)
                if sum(sizes) == c
            )
        return total

    for n in (16, 36, 40):
        assert count_main_thm_functions(n) == brute(n)
    assert math.factorial(4) * math.factorial(4) * 2 ** (2**4) == 37_748_736


# ----------------------------------------------------------------------- 8


@pytest.mark.criterion(8)
@pytest.mark.parametrize("n", range(1, 11))
def test_c8_unitarity(n):
    reports = all_gate_reports(n, w=3)
    worst = max(r.defect for r in reports)
    assert worst <= UNITARY_TOL, [r for r in reports if r.defect > UNITARY_TOL][:3]


# ----------------------------------------------------------------------- 9


AUDIT = [
    ("algorithm1", 10, None),
    ("cor2", 10, None),
    ("main", 10, None),
    ("f_id", 8, None),
    ("f_id", 10, None),
    ("gamma", 8, 1),
    ("gamma_odd", 9, 1),
]


@pytest.mark.criterion(9)
@pytest.mark.parametrize("algo, n, seed", AUDIT, ids=lambda v: str(v))
def test_c9_oracle_audit(algo, n, seed, monkeypatch):
    calls = []
    real = algos.apply_oracle

    def counting(st, x):
        calls.append(1)
        return real(st, x)

    monkeypatch.setattr(algos, "apply_oracle", counting)
    p = Problem.build(algo, n, seed=seed or 0)
    outs, qs, dev, bt = p.run(all_inputs(n), trace=True)
    budget = p.budget()
    assert len(calls) == bt.state.queries == budget
    assert sum(op == "ORACLE" for _, op, _ in bt.state.trace) == budget
    assert set(qs.tolist()) == {budget}
    res = verify(p)
    assert res.verified and res.queries == budget


@pytest.mark.criterion(9)
@pytest.mark.parametrize("algo, n", [("parity_pdsp", 10), ("parity_mm", 8)])
def test_c9_parity_tree_audit(algo, n):
    p = Problem.build(algo, n)
    _, qs, _, _ = p.run(all_inputs(n))
    assert set(qs.tolist()) == {p.budget()}
    assert verify(p).verified
