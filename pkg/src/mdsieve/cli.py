"""Command-line front end.

Every report is a JSON object (or a CSV table) that embeds the resolved
configuration and the package version.  Exit codes: 0 success, 1 a check
failed, 2 usage or precondition error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import __version__
from .arith import small_primes
from .cluster import (
    intervals_csv,
    scan_congruent_strings,
    scan_dense_intervals,
    strings_csv,
)
from .dist import IntegerSetSpec, PrimeSubsetSpec, bv_scan
from .errors import SieveError
from .integrals import (
    DEFAULT_GRID_STEP,
    DEFAULT_MC_SAMPLES,
    DEFAULT_SEED,
    METHODS,
    integral_IJ,
)
from .multfunc import DEFAULT_P0, singular_series
from .tuples import (
    AdmissibleTuple,
    LinearFunction,
    SieveSetup,
    greedy_admissible,
    omega_p,
    parse_inline_tuple,
    parse_tuple_text,
)
from .verifier import (
    SieveConfig,
    SieveContext,
    combined_extract,
    delta_estimate,
    sp_identity_check,
    sum_S1,
    sum_S2,
    sum_S3,
    sum_S4,
)
from .weights import LambdaTable, WeightParams, roundtrip_check

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2
HELP = argparse.ArgumentDefaultsHelpFormatter
CSV_DEFAULT = {"lambda", "scan-intervals", "scan-strings"}


class UsageError(Exception):
    pass


def parse_int(text: str) -> int:
    """Integers, also written as 1e6 or 2.5e5 when the value is integral."""
    try:
        v = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if v != v.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


def parse_real(text: str) -> float:
    if text.lower() in ("inf", "infinity", "∞"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_pair(text: str) -> tuple[int, int]:
    parts = text.replace(",", " ").split()
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a b', got {text!r}")
    return parse_int(parts[0]), parse_int(parts[1])


def _add_tuple(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--tuple", help="inline tuple 'a b;a b;...'")
    g.add_argument("--tuple-file", type=Path, help="tuple file, one 'a b' per line")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, help="write the report here")
    p.add_argument("--format", choices=("json", "csv"), help="report format")


def _add_sieve(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x", type=parse_int, default=10**6, help="A = [x, 2x)")
    p.add_argument("--y", type=parse_int, help="use the short interval [x, x+y) instead")
    p.add_argument("--r-exp", type=float, default=0.1, help="R = x^r_exp")
    p.add_argument("--theta", type=float, default=1 / 3, help="level parameter theta")
    p.add_argument("--B", type=parse_int, default=1, help="excluded modulus B")
    p.add_argument("--primes", choices=("all", "progression", "even-index"), default="all", help="prime subset P")
    p.add_argument("--pq", type=parse_int, default=1, help="modulus for --primes progression")
    p.add_argument("--pa", type=parse_int, default=0, help="residue for --primes progression")
    p.add_argument("--P0", type=parse_int, default=DEFAULT_P0, help="Euler product cutoff")
    p.add_argument("--grid-step", type=float, default=DEFAULT_GRID_STEP, help="convolution grid step")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    p.add_argument("--timing", action="store_true", help="record wall-clock runtime (breaks byte-identical output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdsieve", description="Multidimensional sieve toolkit.", formatter_class=HELP)
    parser.add_argument("--version", action="version", version=f"mdsieve {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("admissible", help="admissibility and local data of a tuple", formatter_class=HELP)
    _add_tuple(p)
    _add_output(p)

    p = sub.add_parser("greedy", help="greedy admissible tuple {qn + a + q b_i}", formatter_class=HELP)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--length", type=parse_int, required=True)
    p.add_argument("--q", type=parse_int, default=1)
    p.add_argument("--a", type=parse_int, default=0)
    _add_output(p)

    p = sub.add_parser("singular", help="singular series with tail bound", formatter_class=HELP)
    _add_tuple(p)
    p.add_argument("--B", type=parse_int, default=1)
    p.add_argument("--D", type=parse_int, default=1)
    p.add_argument("--P0", type=parse_int, default=DEFAULT_P0)
    _add_output(p)

    p = sub.add_parser("integrals", help="I_k and J_k", formatter_class=HELP)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--which", choices=("I", "J", "both"), default="both")
    p.add_argument("--G", choices=("F", "F1", "F2"), default="F")
    p.add_argument("--method", choices=METHODS, default="convolution")
    p.add_argument("--grid-step", type=float, default=DEFAULT_GRID_STEP)
    p.add_argument("--mc-samples", type=parse_int, default=DEFAULT_MC_SAMPLES)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_output(p)

    p = sub.add_parser("lambda", help="lambda_d table", formatter_class=HELP)
    _add_tuple(p)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--B", type=parse_int, default=1)
    p.add_argument("--P0", type=parse_int, default=DEFAULT_P0)
    _add_output(p)

    p = sub.add_parser("verify", help="weighted sums against predicted main terms", formatter_class=HELP)
    vsub = p.add_subparsers(dest="which", required=True)
    for name in ("s1", "s2", "s3", "s4", "extract", "delta"):
        q = vsub.add_parser(name, formatter_class=HELP)
        _add_tuple(q)
        _add_sieve(q)
        _add_output(q)
        if name in ("s2", "s4"):
            q.add_argument("--m-index", type=int, default=0, help="0-based index of L_m")
        if name == "s3":
            q.add_argument("--L0", type=parse_pair, required=True, help="'a b' for L0 = a n + b")
            q.add_argument("--xi", type=float, default=0.05)
            q.add_argument("--D", type=parse_int, default=1)
        if name in ("s4", "extract"):
            q.add_argument("--rho", type=float, default=0.03)
        if name == "extract":
            q.add_argument("--m", type=int, default=1)
            q.add_argument("--mode", choices=("basic", "consecutive"), default="basic")
            q.add_argument("--eta", type=float, default=1.0)

    p = sub.add_parser("bv", help="progression error scan", formatter_class=HELP)
    p.add_argument("--kind", choices=("A", "P"), default="A")
    p.add_argument("--x", type=parse_int, required=True)
    p.add_argument("--Q", type=parse_int, required=True)
    p.add_argument("--B", type=parse_int, default=1)
    p.add_argument("--L", type=parse_pair, default=(1, 0))
    p.add_argument("--theta", type=float, default=1 / 3)
    _add_output(p)

    p = sub.add_parser("scan-intervals", help="windows [x0, x0+y] with many primes", formatter_class=HELP)
    p.add_argument("--lo", type=parse_int, required=True)
    p.add_argument("--hi", type=parse_int, required=True)
    p.add_argument("--y", type=parse_int, required=True)
    p.add_argument("--threshold", type=int, required=True)
    _add_output(p)

    p = sub.add_parser("scan-strings", help="congruent strings of consecutive primes", formatter_class=HELP)
    p.add_argument("--x", type=parse_int, required=True)
    p.add_argument("--q", type=parse_int, required=True)
    p.add_argument("--a", type=parse_int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--epsilon", type=parse_real, default=math.inf)
    _add_output(p)

    p = sub.add_parser("selfcheck", help="identity suites and integral cross-checks", formatter_class=HELP)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--mc-samples", type=parse_int, default=10**6)
    _add_output(p)
    return parser


def _tuple_from(args):
    if args.tuple is not None:
        return parse_inline_tuple(args.tuple)
    try:
        text = args.tuple_file.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read tuple file: {exc}") from None
    return parse_tuple_text(text)


def _config(args) -> dict:
    out = {}
    for key, val in sorted(vars(args).items()):
        if key in ("out", "timing"):
            continue
        if isinstance(val, Path):
            val = str(val)
        elif isinstance(val, float) and math.isinf(val):
            val = "inf"
        elif isinstance(val, tuple):
            val = list(val)
        out[key] = val
    return out


def _jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _envelope(args, result) -> str:
    doc = {"version": __version__, "command": args.command, "config": _config(args), "result": result}
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


# --- command handlers: each returns (text, exit code) ------------------------


def cmd_admissible(args):
    tup = _tuple_from(args)
    omega = {str(int(p)): omega_p(tup, int(p)) for p in small_primes(max(tup.k, 2))}
    res = {
        "tuple": [list(p) for p in tup.pairs()],
        "k": tup.k,
        "admissible": tup.admissible,
        "omega_small_primes": omega,
        "ramified_primes": list(tup.ramified_primes()),
    }
    return _envelope(args, res), EXIT_OK


def cmd_greedy(args):
    g = greedy_admissible(args.k, args.length, args.q, args.a)
    res = {
        "tuple": [list(p) for p in g.tuple.pairs()],
        "shifts": list(g.shifts),
        "survivor_count": len(g.survivors),
        "admissible": g.tuple.admissible,
    }
    return _envelope(args, res), EXIT_OK


def cmd_singular(args):
    setup = SieveSetup(_tuple_from(args), args.B)
    v = singular_series(setup, args.D, args.P0)
    lo, hi = v.interval
    res = {"value": v.value, "log_value": v.log_value, "tail_log_bound": v.tail_log_bound, "truncation_prime": v.truncation_prime, "D": v.D, "interval": [lo, hi]}
    return _envelope(args, res), EXIT_OK


def cmd_integrals(args):
    which = ("I", "J") if args.which == "both" else (args.which,)
    res = {}
    for w in which:
        est = integral_IJ(args.k, w, args.G, args.method, args.grid_step, args.mc_samples, args.seed)
        res[w] = {
            "value": est.value,
            "method": est.method,
            "error_estimate": est.error_estimate,
            "grid_step": est.grid_step,
            "sample_count": est.sample_count,
            "seed": est.seed,
            "notes": list(est.notes),
        }
    return _envelope(args, res), EXIT_OK


def cmd_lambda(args):
    setup = SieveSetup(_tuple_from(args), args.B)
    table = LambdaTable.build(WeightParams(setup, args.R, P0=args.P0))
    if (args.format or "csv") == "csv":
        return table.to_csv(), EXIT_OK
    res = {
        "entries": len(table),
        "normalization": table.params.normalization,
        "roundtrip_max_relative_error": roundtrip_check(table),
        "size_diagnostic": table.size_diagnostic(),
        "lambda": [[list(d), v] for d, v in table.lam.items()],
    }
    return _envelope(args, res), EXIT_OK


def _sieve_config(args) -> SieveConfig:
    setup = SieveSetup(_tuple_from(args), args.B)
    A = IntegerSetSpec.short(args.x, args.y) if args.y is not None else IntegerSetSpec.interval(args.x)
    P = PrimeSubsetSpec(args.primes, args.pq, args.pa)
    return SieveConfig(setup, A, P, args.r_exp, args.theta, args.P0, args.grid_step, max(args.jobs, 1))


def cmd_verify(args):
    ctx = SieveContext(_sieve_config(args))
    code = EXIT_OK
    if args.which == "s1":
        rep = sum_S1(ctx).to_dict()
    elif args.which == "s2":
        rep = sum_S2(ctx, args.m_index).to_dict()
    elif args.which == "s3":
        rep = sum_S3(ctx, LinearFunction(*args.L0), args.xi, args.D).to_dict()
    elif args.which == "s4":
        rep = sum_S4(ctx, args.m_index, args.rho).to_dict()
    elif args.which == "delta":
        rep = {"delta": delta_estimate(ctx)}
    else:
        res = combined_extract(ctx, args.m, args.rho, args.mode, args.eta)
        rep = res.to_dict()
        if res.violations:
            code = EXIT_CHECK_FAILED
    if "runtime" in rep and not args.timing:
        rep["runtime"] = None
    return _envelope(args, rep), code


def cmd_bv(args):
    A = IntegerSetSpec.interval(args.x)
    rep = bv_scan(args.kind, A, args.Q, args.B, PrimeSubsetSpec(), LinearFunction(*args.L), args.theta)
    if args.format == "csv":
        return rep.to_csv(), EXIT_OK
    return _envelope(args, json.loads(rep.to_json())), EXIT_OK


def cmd_scan_intervals(args):
    hits = scan_dense_intervals(args.lo, args.hi, args.y, args.threshold)
    if (args.format or "csv") == "csv":
        return intervals_csv(hits), EXIT_OK
    width = args.hi - args.lo + 1
    res = {
        "count": len(hits),
        "density": len(hits) / width,
        "hits": [{"x0": h.x0, "y": h.y, "count": h.count, "primes": list(h.primes)} for h in hits],
    }
    return _envelope(args, res), EXIT_OK


def cmd_scan_strings(args):
    hits, count = scan_congruent_strings(args.x, args.q, args.a, args.m, args.epsilon)
    if (args.format or "csv") == "csv":
        return strings_csv(hits), EXIT_OK
    gaps = [h.gap for h in hits]
    res = {
        "count": count,
        "mean_gap": sum(gaps) / len(gaps) if gaps else None,
        "max_gap": max(gaps) if gaps else None,
        "hits": [{"p_n": h.p_n, "m": h.m, "q": h.q, "a": h.a, "gap": h.gap} for h in hits],
    }
    return _envelope(args, res), EXIT_OK


SELFCHECK_TUPLES = {
    2: ([(1, 0), (1, 2)], [(1, 1), (2, 1)]),
    3: ([(1, 0), (1, 2), (1, 6)], [(1, 1), (2, 1), (4, 1)]),
}


def run_selfcheck(seed: int, mc_samples: int) -> dict:
    out: dict = {"sp_identities": [], "roundtrip": [], "integrals": []}
    for k in (1, 2, 3):
        for p in (5, 7, 11, 13):
            for variant in ("Sp", "Sp_m", "Sp_m_prime"):
                r = sp_identity_check(k, p, variant)
                out["sp_identities"].append({"k": k, "p": p, "variant": variant, "cases": r.cases, "mismatches": len(r.mismatches), "passed": r.passed})
    for k, families in SELFCHECK_TUPLES.items():
        for pairs in families:
            setup = SieveSetup(AdmissibleTuple.from_pairs(pairs))
            for R in (50, 100, 200):
                table = LambdaTable.build(WeightParams(setup, R))
                err = roundtrip_check(table)
                out["roundtrip"].append(
                    {"tuple": [list(t) for t in pairs], "R": R, "entries": len(table), "max_relative_error": err, "passed": err <= 1e-9}
                )
    for k in (2, 3):
        for w in ("I", "J"):
            conv = integral_IJ(k, w, method="convolution")
            quad = integral_IJ(k, w, method="quadrature")
            mc = integral_IJ(k, w, method="monte-carlo", samples=mc_samples, seed=seed)
            rel_q = abs(conv.value / quad.value - 1)
            rel_mc = abs(mc.value / conv.value - 1)
            out["integrals"].append(
                {
                    "k": k,
                    "which": w,
                    "convolution": conv.value,
                    "quadrature": quad.value,
                    "monte_carlo": mc.value,
                    "quadrature_relative_difference": rel_q,
                    "monte_carlo_relative_difference": rel_mc,
                    "passed": rel_q <= 1e-6 and rel_mc <= 0.01,
                }
            )
    out["passed"] = all(e["passed"] for group in ("sp_identities", "roundtrip", "integrals") for e in out[group])
    return out


def cmd_selfcheck(args):
    res = run_selfcheck(args.seed, args.mc_samples)
    return _envelope(args, res), EXIT_OK if res["passed"] else EXIT_CHECK_FAILED


HANDLERS = {
    "admissible": cmd_admissible,
    "greedy": cmd_greedy,
    "singular": cmd_singular,
    "integrals": cmd_integrals,
    "lambda": cmd_lambda,
    "verify": cmd_verify,
    "bv": cmd_bv,
    "scan-intervals": cmd_scan_intervals,
    "scan-strings": cmd_scan_strings,
    "selfcheck": cmd_selfcheck,
}


def run_command(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if getattr(args, "format", None) == "csv" and args.command not in CSV_DEFAULT | {"bv"}:
        print(f"mdsieve: --format csv is not available for {args.command}", file=sys.stderr)
        return EXIT_USAGE
    started = time.perf_counter()
    try:
        text, code = HANDLERS[args.command](args)
    except (SieveError, UsageError, OverflowError) as exc:
        print(f"mdsieve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "out", None):
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if getattr(args, "timing", False):
        print(f"mdsieve: {time.perf_counter() - started:.3f}s", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> None:
    sys.exit(run_command(argv))
