"""qquery command line: analyze, run, verify, count, report.

Exit codes: 0 success, 2 verification failure, 1 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from typing import Any, Sequence

import numpy as np

from . import algos, classical
from .boolfn import (
    ANF,
    TruthTable,
    all_inputs,
    anf_to_truth_table,
    max_granularity,
    real_poly_degree,
    truth_table_to_anf,
    walsh_coefficient,
    weight,
)
from .classes import (
    MMBentSpec,
    SpecError,
    count_gamma_raw,
    count_main_thm_functions,
    load_spec,
    spec_table,
)
from .harness import ALGORITHMS, Problem, default_main_spec, f1_spec, f2_spec, verify
from .qsim import write_trace_csv

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2, which is our failure code
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(obj: Any, fmt: str, out=None) -> None:
    out = out or sys.stdout
    rows = obj if isinstance(obj, list) else [obj]
    if fmt == "csv":
        keys: list[str] = []
        for r in rows:
            keys += [k for k in r if k not in keys]
        w = csv.DictWriter(out, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in keys})
    else:
        json.dump(obj, out, indent=2, sort_keys=False)
        out.write("\n")


# ------------------------------------------------------------------ inputs


def _function_from_args(args: argparse.Namespace) -> tuple[TruthTable, Any]:
    given = [args.spec is not None, args.anf is not None, args.hex is not None]
    if sum(given) != 1:
        raise UsageError("give exactly one of --spec, --anf, --hex")
    if args.spec is not None:
        spec = load_spec(args.spec)
        return spec_table(spec), spec
    if args.anf is not None:
        anf = ANF.parse(args.anf, args.n)
        return anf_to_truth_table(anf), None
    if args.n is None:
        raise UsageError("--hex needs --n")
    return TruthTable.from_hex(args.hex, args.n), None


def _parse_input(text: str, n: int) -> np.ndarray:
    s = text.strip()
    if any(c not in "01" for c in s):
        raise UsageError("--input must be a bit string x1 x2 ... xn, e.g. 101100")
    if len(s) != n:
        raise UsageError(f"input length {len(s)} != n = {n}")
    return np.array([int(c) for c in s], dtype=np.uint8)


def _problem(args: argparse.Namespace) -> Problem:
    spec = load_spec(args.spec) if args.spec else None
    return Problem.build(args.algo, args.n, spec, seed=args.seed, t=args.t)


# -------------------------------------------------------------- commands


def analyze(tt: TruthTable, brute_max_n: int = classical.BRUTE_DPLUS_MAX_N) -> dict[str, Any]:
    out: dict[str, Any] = {
        "n": tt.n,
        "weight": weight(tt),
        "anf": str(truth_table_to_anf(tt)),
        "pdeg": real_poly_degree(tt),
        "gran_m": max_granularity(tt),
        "walsh_empty": str(walsh_coefficient(tt, 0)),
        "dplus_lb": classical.dplus_lower_bound(tt),
    }
    if tt.n <= brute_max_n:
        out["brute_D"] = classical.brute_force_D(tt)
        out["brute_Dplus"] = classical.brute_force_Dplus(tt)
    return out


def cmd_analyze(args: argparse.Namespace) -> int:
    tt, _ = _function_from_args(args)
    _emit(analyze(tt), args.out)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    if args.verify:
        return cmd_verify(args)
    if args.input is None:
        raise UsageError("run needs --input (or --verify)")
    p = _problem(args)
    x = _parse_input(args.input, p.n)
    outs, qs, dev, bt = p.run(x[None, :], trace=args.trace is not None)
    if args.trace is not None and bt is not None:
        write_trace_csv(bt.state, args.trace)
    row = {
        "algo": p.algo,
        "n": p.n,
        "input": args.input.strip(),
        "output": int(outs[0]),
        "expected": int(p.table()(x)),
        "queries": int(qs[0]),
        "budget": p.budget(),
        "final_state_purity": float(dev[0]),
        "gate_count": bt.gate_count if bt is not None else None,
    }
    _emit(row, args.out)
    return EXIT_OK if row["output"] == row["expected"] and dev[0] <= algos.PURITY_TOL else EXIT_FAILED


def cmd_verify(args: argparse.Namespace) -> int:
    p = _problem(args)
    res = verify(p, jobs=args.jobs, fault=args.inject_fault)
    _emit(res.to_json(timing=args.timing), args.out)
    return EXIT_OK if res.verified else EXIT_FAILED


def cmd_count(args: argparse.Namespace) -> int:
    cls, n = args.cls, args.n
    if n is None:
        raise UsageError("count needs --n")
    if cls in ("pdsp", "main"):
        row: dict[str, Any] = {"class": "main", "n": n, "count": count_main_thm_functions(n)}
    else:
        raw, lower = count_gamma_raw(n)
        row = {"class": "gamma", "n": n, "raw": raw, "pnp_classes_lower": lower}
    _emit(row, args.out)
    return EXIT_OK


def _report_problems(n: int, seed: int) -> list[Problem]:
    out = []
    if n % 4 == 2 and n >= 6:
        out.append(Problem.build("algorithm1", n))
        out.append(Problem.build("cor2", n))
        try:
            out.append(Problem.build("main", n, default_main_spec(n, 1)))
        except SpecError:
            pass
    if n % 2 == 0 and n >= 4:
        out.append(Problem.build("f_id", n))
        out.append(Problem.build("gamma", n, seed=seed))
    elif n >= 5:
        out.append(Problem.build("gamma_odd", n, seed=seed))
    return out


def _tree_cost(p: Problem) -> int | None:
    X = all_inputs(p.n)
    if p.algo in ("algorithm1", "cor2", "main"):
        ps = {"algorithm1": lambda: f1_spec(p.n), "cor2": lambda: f2_spec(p.n),
              "main": lambda: p.spec.pdsp()}[p.algo]()
        return max(classical.pdsp_parity_tree(ps, x).queries for x in X)
    if p.algo == "f_id":
        mm = MMBentSpec(p.n, tuple(range(1 << (p.n // 2))))
        return max(classical.mm_generalized_parity_tree(mm, x).queries for x in X)
    if p.algo == "gamma":
        return max(classical.gamma_parity_tree(p.spec, x).queries for x in X)
    return None


def _dplus_formula(p: Problem) -> int | None:
    n = p.n
    if p.algo in ("algorithm1", "cor2"):
        return n - 1  # two monomials: n - q + 1
    if p.algo == "main":
        return n - p.spec.t
    if p.algo in ("f_id", "gamma"):
        return n // 2 + 1
    return None


def report_row(p: Problem, jobs: int = 1, brute_max_n: int = classical.BRUTE_D_MAX_N) -> dict[str, Any]:
    start = time.perf_counter()
    res = verify(p, jobs=jobs)
    if res.verified and res.inputs_checked != 1 << p.n:
        raise AssertionError("verified rows must come from a full sweep")
    tt = p.table()
    row = {
        "name": p.name,
        "n": p.n,
        "qc_algo": res.queries,
        "qc_formula": p.budget(),
        "dplus_lower": classical.dplus_lower_bound(tt),
        "dplus_tree_cost": _tree_cost(p),
        "dplus_formula": _dplus_formula(p),
        "pdeg": real_poly_degree(tt),
        "brute_D": classical.brute_force_D(tt) if p.n <= brute_max_n else None,
        "verified": res.verified,
        "inputs_checked": res.inputs_checked,
    }
    row["wall_time"] = round(time.perf_counter() - start, 3)
    return row


def cmd_report(args: argparse.Namespace) -> int:
    if not args.sizes:
        raise UsageError("report needs at least one --n")
    rows = []
    for n in args.sizes:
        probs = _report_problems(n, args.seed)
        if not probs:
            raise UsageError(f"no admissible class at n={n}")
        for p in probs:
            row = report_row(p, jobs=args.jobs, brute_max_n=args.brute_max_n)
            if not args.timing:
                row.pop("wall_time")
            rows.append(row)
    _emit(rows, args.out)
    return EXIT_OK if all(r["verified"] for r in rows) else EXIT_FAILED


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qquery", description="Exact quantum query algorithms and Boolean function analysis.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp: argparse.ArgumentParser, fmt: str = "json") -> None:
        sp.add_argument("--out", choices=["json", "csv"], default=fmt)

    a = sub.add_parser("analyze", help="weight, ANF, pdeg, granularity, D+ bound (brute force for n <= 5)")
    a.add_argument("--spec")
    a.add_argument("--anf")
    a.add_argument("--hex")
    a.add_argument("--n", type=int)
    common(a)
    a.set_defaults(func=cmd_analyze)

    def algo_args(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--algo", choices=ALGORITHMS, required=True)
        sp.add_argument("--spec", help="JSON function spec")
        sp.add_argument("--n", type=int)
        sp.add_argument("--t", type=int, default=1, help="number of g monomials for --algo main without --spec")
        sp.add_argument("--seed", type=int, default=0, help="64-bit seed for random Gamma specs")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--timing", action="store_true", help="include wall_time (breaks bit-identical output)")
        sp.add_argument("--inject-fault", dest="inject_fault", help=argparse.SUPPRESS)
        common(sp)

    r = sub.add_parser("run", help="run one algorithm on one input")
    algo_args(r)
    r.add_argument("--input", help="bit string x1..xn")
    r.add_argument("--trace", help="write the gate trace CSV here")
    r.add_argument("--verify", action="store_true", help="verify over all inputs instead")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="exhaustive exactness and query-budget check")
    algo_args(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("count", help="class sizes")
    c.add_argument("--class", dest="cls", choices=["main", "pdsp", "gamma"], required=True)
    c.add_argument("--n", type=int)
    common(c)
    c.set_defaults(func=cmd_count)

    rp = sub.add_parser("report", help="comparison table over the given sizes")
    rp.add_argument("--n", dest="sizes", type=int, nargs="+", required=True)
    rp.add_argument("--seed", type=int, default=0)
    rp.add_argument("--jobs", type=int, default=1)
    rp.add_argument("--brute-max-n", dest="brute_max_n", type=int, default=12)
    rp.add_argument("--timing", action="store_true")
    common(rp, "csv")
    rp.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, SpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
