"""Problem registry and the exhaustive verification harness used by the CLI and tests."""

from __future__ import annotations

import contextlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import algos, classical
from .boolfn import TruthTable, all_inputs
from .classes import (
    FIdSpec,
    GammaSpec,
    MainThmSpec,
    MMBentSpec,
    PdspSpec,
    SpecError,
    feasible_main_partitions,
    make_f_id,
    make_gamma,
    make_main_thm_function,
    make_mm_bent,
    make_pdsp,
    random_gamma_spec,
)
from .qsim import PURITY_TOL, corrupt_gate

ALGORITHMS = ("algorithm1", "cor2", "main", "f_id", "gamma", "gamma_odd", "parity_pdsp", "parity_mm")
VERIFY_MAX_N = 20
FAILED = 255  # output marker for an input whose run raised


def f1_spec(n: int) -> PdspSpec:
    k = n // 2
    return PdspSpec(n, tuple(range(1, n + 1)), (tuple(range(1, k + 1)), tuple(range(k + 1, n + 1))), ())


def f2_spec(n: int) -> PdspSpec:
    """x1..x_{3n/4} + x_{n/2+1}..x_n written as pdsp: shared factor moved to tilde."""
    k, m = n // 2, 3 * n // 4
    return PdspSpec(n, tuple(range(1, k + 1)) + tuple(range(m + 1, n + 1)),
                    (tuple(range(1, k + 1)), tuple(range(m + 1, n + 1))), tuple(range(k + 1, m + 1)))


def default_main_spec(n: int, t: int = 1) -> MainThmSpec:
    found = feasible_main_partitions(n, t)
    if not found:
        raise SpecError(f"no feasible g partition with t={t} at n={n}")
    return found[0]


@dataclass
class Problem:
    """An algorithm bound to one concrete function."""

    algo: str
    n: int
    spec: Any = None

    def __post_init__(self) -> None:
        if self.algo not in ALGORITHMS:
            raise SpecError(f"unknown algorithm {self.algo!r}; choose from {', '.join(ALGORITHMS)}")

    @classmethod
    def build(cls, algo: str, n: int | None = None, spec: Any = None, seed: int = 0, t: int = 1) -> "Problem":
        if spec is None and n is None:
            raise SpecError("need --n or --spec")
        if spec is not None:
            n_spec = spec.n + (1 if algo == "gamma_odd" else 0)
            if n is not None and n != n_spec:
                raise SpecError(f"--n {n} disagrees with the --spec file (n = {n_spec})")
            n = n_spec
        assert n is not None
        if algo in ("algorithm1", "cor2"):
            algos._require_2mod4(n)
        elif algo == "main":
            algos._require_2mod4(n)
            spec = spec if spec is not None else default_main_spec(n, t)
            if not isinstance(spec, MainThmSpec):
                raise SpecError("--algo main needs a 'main' spec")
            spec.validate()
        elif algo == "f_id":
            if spec is not None and not isinstance(spec, FIdSpec):
                raise SpecError("--algo f_id needs an 'f_id' spec")
            spec = FIdSpec(n)
            spec.validate()
        elif algo == "gamma":
            spec = spec if spec is not None else random_gamma_spec(n, seed)
            if not isinstance(spec, GammaSpec):
                raise SpecError("--algo gamma needs a 'gamma' spec")
            spec.validate()
        elif algo == "gamma_odd":
            if n % 2 == 0 or n < 5:
                raise SpecError(f"gamma_odd needs odd n >= 5, got n={n}")
            spec = spec if spec is not None else random_gamma_spec(n - 1, seed)
            if not isinstance(spec, GammaSpec):
                raise SpecError("--algo gamma_odd needs a 'gamma' spec for the even part")
            spec.validate()
        elif algo == "parity_pdsp":
            if spec is None:
                algos._require_2mod4(n)
                spec = f1_spec(n)
            elif isinstance(spec, MainThmSpec):
                spec = make_main_thm_function(spec)[1]
            if not isinstance(spec, PdspSpec):
                raise SpecError("--algo parity_pdsp needs a 'pdsp' or 'main' spec")
            spec.validate()
        elif algo == "parity_mm":
            if spec is None or isinstance(spec, FIdSpec):
                if n % 2:
                    raise SpecError("parity_mm needs even n")
                spec = MMBentSpec(n, tuple(range(1 << (n // 2))))
            if not isinstance(spec, MMBentSpec):
                raise SpecError("--algo parity_mm needs an 'mm' or 'f_id' spec")
            spec.validate()
        return cls(algo, n, spec)

    @property
    def name(self) -> str:
        return {
            "algorithm1": "f1",
            "cor2": "f2",
            "main": "pdsp_main",
            "f_id": "f_id",
            "gamma": "gamma",
            "gamma_odd": "gamma_odd",
            "parity_pdsp": "pdsp_tree",
            "parity_mm": "mm_tree",
        }[self.algo]

    def table(self) -> TruthTable:
        a, n = self.algo, self.n
        if a == "algorithm1":
            return make_pdsp(f1_spec(n))
        if a == "cor2":
            return make_pdsp(f2_spec(n))
        if a == "main":
            return make_main_thm_function(self.spec)[0]
        if a == "f_id":
            return make_f_id(n)
        if a == "gamma":
            return make_gamma(self.spec)
        if a == "gamma_odd":
            half = make_gamma(self.spec).bits
            return TruthTable(n, np.concatenate([half, half ^ 1]))
        if a == "parity_pdsp":
            return make_pdsp(self.spec)
        return make_mm_bent(self.spec)

    def budget(self) -> int:
        a, n = self.algo, self.n
        if a == "parity_pdsp":
            return n - self.spec.q + 1
        if a == "parity_mm":
            return n // 2 + 1
        return algos.budget_formula("gamma_odd" if a == "gamma_odd" else ("main" if a == "main" else a), n)

    def run(self, X: np.ndarray, trace: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray, Any]:
        """(outputs, queries per row, purity deviation per row, BatchTrace or None)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
        if X.shape[1] != self.n:
            raise SpecError(f"input length {X.shape[1]} != n = {self.n}")
        a = self.algo
        if a in ("parity_pdsp", "parity_mm"):
            tree = classical.pdsp_parity_tree if a == "parity_pdsp" else classical.mm_generalized_parity_tree
            traces = [tree(self.spec, row) for row in X]
            outs = np.array([t.output for t in traces], dtype=np.uint8)
            qs = np.array([t.queries for t in traces], dtype=np.int64)
            return outs, qs, np.zeros(len(traces)), None
        if a == "algorithm1":
            bt = algos.algorithm1_batch(self.n, X, trace)
        elif a == "cor2":
            bt = algos.cor2_batch(self.n, X, trace)
        elif a == "main":
            bt = algos.main_thm_batch(self.spec, X, trace)
        elif a == "f_id":
            bt = algos.f_id_batch(self.n, X, trace)
        elif a == "gamma":
            bt = algos.gamma_batch(self.spec, X, trace)
        else:
            bt = algos.gamma_odd_batch(self.spec, X, trace)
        return bt.outputs, np.full(X.shape[0], bt.queries, dtype=np.int64), bt.purity, bt


@dataclass
class VerifyResult:
    name: str
    algo: str
    n: int
    verified: bool
    inputs_checked: int
    queries: int | None
    budget: int
    max_purity_deviation: float
    first_counterexample: str | None
    wall_time: float

    def to_json(self, timing: bool = True) -> dict[str, Any]:
        d = dict(self.__dict__)
        if not timing:
            d.pop("wall_time")
        return d


def bits_to_str(row: np.ndarray) -> str:
    return "".join(str(int(v)) for v in row)


def _run_range(problem: Problem, lo: int, hi: int, fault: str | None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = all_inputs(problem.n)[lo:hi]
    guard = corrupt_gate(fault) if fault else contextlib.nullcontext()
    with guard:
        try:
            outs, qs, dev, _ = problem.run(X)
        except (ValueError, RuntimeError):
            # a runtime check tripped somewhere in the block: redo row by row
            outs = np.full(X.shape[0], FAILED, dtype=np.uint8)
            qs = np.full(X.shape[0], -1, dtype=np.int64)
            dev = np.zeros(X.shape[0])
            for i, row in enumerate(X):
                try:
                    o, q, d, _ = problem.run(row[None, :])
                except (ValueError, RuntimeError):
                    continue
                outs[i], qs[i], dev[i] = o[0], q[0], d[0]
    return outs, qs, dev


def verify(problem: Problem, jobs: int = 1, fault: str | None = None) -> VerifyResult:
    """Run every input, compare with the truth table, audit the query counter."""
    n = problem.n
    if n > VERIFY_MAX_N:
        raise SpecError(f"exhaustive verification needs n <= {VERIFY_MAX_N}")
    start = time.perf_counter()
    size = 1 << n
    jobs = max(1, min(jobs, size))
    cuts = [size * j // jobs for j in range(jobs + 1)]
    ranges = [(cuts[j], cuts[j + 1]) for j in range(jobs)]
    if jobs == 1:
        parts = [_run_range(problem, 0, size, fault)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(_run_range, problem, lo, hi, fault) for lo, hi in ranges]
            parts = [f.result() for f in futs]  # merged in input order
    outs = np.concatenate([p[0] for p in parts])
    qs = np.concatenate([p[1] for p in parts])
    dev = np.concatenate([p[2] for p in parts])
    expect = problem.table().bits
    wrong = np.nonzero(outs != expect)[0]
    budget = problem.budget()
    over = np.nonzero(qs != budget)[0]
    impure = np.nonzero(dev > PURITY_TOL)[0]
    bad = np.concatenate([wrong, over, impure])
    first = None
    if bad.size:
        first = bits_to_str(all_inputs(n)[int(bad.min())])
    checked = int(outs.shape[0])
    verified = not bad.size and checked == size
    q = int(qs[0]) if np.all(qs == qs[0]) else None
    return VerifyResult(problem.name, problem.algo, n, verified, checked, q, budget,
                        float(dev.max()), first, time.perf_counter() - start)
