import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qquery.boolfn import (
    TruthTable,
    anf_to_truth_table,
    granularity,
    max_granularity,
    parse_anf,
    real_poly_degree,
    truth_table_to_anf,
    walsh_coefficient,
    walsh_sums,
)
from qquery.classes import (
    FIdSpec,
    GammaSpec,
    MainThmSpec,
    MMBentSpec,
    PdspSpec,
    SpecError,
    count_gamma_raw,
    count_main_thm_functions,
    feasible_main_partitions,
    gamma_mm_equivalent,
    make_f_id,
    make_gamma,
    make_main_thm_function,
    make_mm_bent,
    make_pdsp,
    pnp_equivalent,
    random_gamma_spec,
    random_pdsp,
    spec_from_json,
    spec_table,
)

from . import oracles

# ------------------------------------------------------------------- pdsp


def test_pdsp_table_matches_formula():
    spec = PdspSpec(6, (1, 2, 3, 4), ((1, 2), (3, 4)), (5, 6))
    tt = make_pdsp(spec)
    expect = oracles.table_of(lambda x: ((x[0] & x[1]) ^ (x[2] & x[3])) & x[4] & x[5], 6)
    assert tt.bits.tolist() == expect


@pytest.mark.parametrize(
    "spec, needle",
    [
        (PdspSpec(4, (1, 2, 3), ((1, 2), (3,)), (4,)), "at least q=2"),
        (PdspSpec(4, (1, 2, 3, 4), ((1, 2), (2, 3, 4)), ()), "exactly one monomial"),
        (PdspSpec(4, (1, 2, 3), ((1, 2, 3),), (3, 4)), "disjoint"),
        (PdspSpec(5, (1, 2), ((1, 2),), (3, 4)), "cover"),
        (PdspSpec(4, (1, 2, 3, 4), ((1, 2), ()), ()), "nonempty"),
    ],
)
def test_pdsp_rejects(spec, needle):
    with pytest.raises(SpecError, match=needle):
        spec.validate()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(4, 12))
def test_pdsp_granularity_is_n_minus_q(seed, q, n):
    if q * q > n:
        return
    spec = random_pdsp(np.random.default_rng(seed), n, q)
    spec.validate()
    tt = make_pdsp(spec)
    assert granularity(walsh_coefficient(tt, 0)) == n - q
    assert max_granularity(tt) == n - q
    assert real_poly_degree(tt) == n


# -------------------------------------------------- three-quarter family


def test_main_function_anf_n10():
    tt, ps = make_main_thm_function(MainThmSpec(10, 1, ((8, 9, 10),)))
    expect = parse_anf("x6*x7*x8*x9*x10 + x1*x2*x3*x4*x5*x6*x7", 10)
    assert truth_table_to_anf(tt) == expect
    assert ps.q == 2 and ps.tilde_vars == (6, 7)


@pytest.mark.parametrize("n, t, count", [(14, 1, 1), (14, 2, 0), (10, 1, 1), (22, 2, 10)])
def test_feasible_partitions(n, t, count):
    found = feasible_main_partitions(n, t)
    assert len(found) == count
    for spec in found:
        spec.validate()


def test_main_spec_rejects_small_blocks():
    with pytest.raises(SpecError, match="at least t\\+1"):
        MainThmSpec(14, 2, ((11,), (12, 13, 14))).validate()
    with pytest.raises(SpecError, match="partition"):
        MainThmSpec(14, 1, ((11, 12, 13),)).validate()


@pytest.mark.parametrize("n, count", [(16, 1), (36, 3), (40, 4)])
def test_count_main(n, count):
    assert count_main_thm_functions(n) == count


def test_count_main_matches_composition_enumeration():
    # ordered block sizes of the ceil(n/4) g variables, t blocks each of size >= t+2
    for n in range(4, 60, 2):
        c = -(-n // 4)
        brute = sum(
            1
            for t in range(1, c + 1)
            for sizes in itertools.product(range(t + 2, c + 1), repeat=t)
            if sum(sizes) == c
        )
        assert count_main_thm_functions(n) == brute


def test_count_main_too_small():
    with pytest.raises(SpecError, match="n too small"):
        count_main_thm_functions(3)


# ---------------------------------------------------------------- MM bent


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_f_id_is_inner_product(n):
    assert make_f_id(n).bits.tolist() == oracles.table_of(oracles.f_id, n)


def test_f_id6_anf():
    assert truth_table_to_anf(make_f_id(6)) == parse_anf("x1*x4 + x2*x5 + x3*x6", 6)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 4, 6]), st.randoms(use_true_random=False))
def test_mm_functions_are_bent(n, r):
    h = n // 2
    phi = list(range(1 << h))
    r.shuffle(phi)
    g = TruthTable(h, np.array([r.randint(0, 1) for _ in range(1 << h)], dtype=np.uint8))
    tt = make_mm_bent(MMBentSpec(n, tuple(phi), g))
    assert set(np.abs(walsh_sums(tt)).tolist()) == {1 << h}


def test_mm_rejects_non_bijection():
    with pytest.raises(SpecError, match="bijection"):
        MMBentSpec(4, (0, 0, 1, 2)).validate()


# ------------------------------------------------------------------ Gamma


def _canonical_id(n):
    a, b, h = n // 4, -(-n // 4), n // 2
    return GammaSpec(
        n, tuple(range(1, a + 1)), tuple(range(a + 1, h + 1)), tuple(range(h + 1, h + a + 1)),
        tuple(range(h + a + 1, n + 1)), tuple(range(1 << a)), tuple(range(1 << b)),
    )


@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_canonical_identity_gamma_is_f_id(n):
    spec = _canonical_id(n)
    assert make_gamma(spec) == make_f_id(n)
    assert make_mm_bent(gamma_mm_equivalent(spec)) == make_f_id(n)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("n", [6, 8])
def test_random_gamma_is_bent(seed, n):
    tt = make_gamma(random_gamma_spec(n, seed))
    assert set(np.abs(walsh_sums(tt)).tolist()) == {1 << (n // 2)}


def test_random_gamma_is_deterministic():
    a, b = random_gamma_spec(12, 7), random_gamma_spec(12, 7)
    assert a.to_json() == b.to_json()
    assert random_gamma_spec(12, 8).to_json() != a.to_json()


@pytest.mark.parametrize(
    "change, constraint",
    [
        ({"phi1": (0, 0)}, "constraint 1"),
        ({"y_hat": (2,), "z_hat": (2, 3)}, "constraint 2"),
        ({"y_hat": (4,), "y_tilde": (1,)}, "constraint 3"),
        ({"x_prime": (1, 2, 3)}, "constraint 4"),
    ],
)
def test_gamma_constraint_messages(change, constraint):
    base = _canonical_id(6).to_json()
    base.update({k: list(v) for k, v in change.items()})
    with pytest.raises(SpecError, match=constraint):
        spec_from_json(base).validate()


def test_gamma_x_prime_cap_n8():
    spec = _canonical_id(8).to_json()
    spec["x_prime"] = [1, 2]  # both in y_hat, cap ceil(8/8) = 1
    with pytest.raises(SpecError, match="constraint 4"):
        spec_from_json(spec).validate()


@pytest.mark.parametrize("n, raw", [(8, 37_748_736), (4, 64)])
def test_count_gamma_raw(n, raw):
    assert count_gamma_raw(n)[0] == raw


def test_count_gamma_raw_small_g():
    # (2^2)! (2^2)! 2^(2^2) at n = 8 with g on ceil(n/4) variables
    assert count_gamma_raw(8, g_arity=2)[0] == 9216


# --------------------------------------------------------------- PNP / JSON


@pytest.mark.parametrize(
    "f, g, same",
    [
        ("x1*x2", "x1 + x2 + x1*x2", True),
        ("x1*x2", "x1*x3", True),
        ("x1*x2 + x3*x4", "x1*x3 + x2*x4", True),
        ("x1*x2*x3", "x1*x2 + x3", False),
        ("x1", "x1 + x2", False),
    ],
)
def test_pnp_equivalent(f, g, same):
    tf = anf_to_truth_table(parse_anf(f, 4))
    tg = anf_to_truth_table(parse_anf(g, 4))
    assert pnp_equivalent(tf, tg) is same


@pytest.mark.parametrize(
    "spec",
    [
        PdspSpec(6, (1, 2, 3, 4), ((1, 2), (3, 4)), (5, 6)),
        MainThmSpec(10, 1, ((8, 9, 10),)),
        MMBentSpec(4, (3, 1, 0, 2), TruthTable.from_hex("6", 2)),
        random_gamma_spec(8, 3),
        FIdSpec(6),
    ],
    ids=["pdsp", "main", "mm", "gamma", "f_id"],
)
def test_json_roundtrip(spec):
    back = spec_from_json(json.loads(json.dumps(spec.to_json())))
    assert back.to_json() == spec.to_json()
    assert spec_table(back) == spec_table(spec)
