"""Compiled vs numpy kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-N time for each backend and the
speedup. Results are checked for equality before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qquery import _pykernels as py
from qquery.qsim import Layout, QState, _csr, _index_plan, par_gate

try:
    from qquery import _kernels as cy
except ImportError:  # pragma: no cover
    cy = None


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases(rng: np.random.Generator):
    n = 20
    ints = rng.integers(-1, 2, size=1 << n).astype(np.int64)
    bits = rng.integers(0, 2, size=1 << n).astype(np.uint8)
    yield "fwht n=20", lambda k: k.fwht_inplace(ints.copy()), lambda k: _copy_run(k.fwht_inplace, ints)
    yield "moebius_xor n=20", lambda k: k.moebius_xor_inplace(bits.copy()), lambda k: _copy_run(k.moebius_xor_inplace, bits)
    yield "moebius_int n=20", lambda k: k.moebius_int_inplace(ints.copy()), lambda k: _copy_run(k.moebius_int_inplace, ints)

    small = rng.integers(0, 2, size=1 << 10).astype(np.uint8)
    yield "decision_depth n=10", lambda k: k.decision_depth(small, 10), lambda k: k.decision_depth(small, 10)

    qn, w, batch = 10, 5, 1024
    st = QState.zero(Layout(qn, w), batch=batch)
    st.amps[:] = rng.normal(size=st.amps.shape)
    flat0 = st.amps.reshape(batch, -1)
    g = par_gate(qn, 0, 3)
    bases, offsets, _ = _index_plan(qn, w, True, (), ((0, 1),), "")
    csr = _csr(g.matrix)

    def gate(k):
        buf = flat0.copy()
        k.apply_sparse_gate(buf, bases, offsets, *csr)
        return buf

    yield f"apply_sparse_gate B={batch} dim={(qn + 1) << w}", gate, gate


def _copy_run(fn, arr):
    a = arr.copy()
    fn(a)
    return a


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if cy is None:
        print("compiled extension not built; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'compiled':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, timed, checked in cases(rng):
        a, b = checked(cy), checked(py)
        if not np.array_equal(np.asarray(a), np.asarray(b)) and not np.allclose(a, b):
            raise SystemExit(f"{name}: backends disagree")
        tc, tp = best_of(lambda: timed(cy), args.repeat), best_of(lambda: timed(py), args.repeat)
        print(f"{name:40s} {tc * 1e3:9.2f}ms {tp * 1e3:9.2f}ms {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
