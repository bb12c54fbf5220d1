"""Command-line interface: ``relpress {check,pressure,periodic,example1,experiment,harness}``.

Exit codes: 0 success, 1 a hypothesis or internal consistency check failed,
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from . import example1 as ex1
from .experiments import (
    HARNESS_KINDS,
    MarkovSampler,
    default_jobs,
    deterministic_gap_report,
    gap_experiment,
    lemma_harness,
    write_csv,
)
from .io import SpecError, bundled_path, load_system, split_word
from .potential import to_pair_form
from .pressure import (
    NoPreimageError,
    corollary_estimator,
    count_preimage_prefixes,
    dn_count_prefixes,
    dn_log_weight_prefixes,
    estimator_Phi,
    estimator_Psi,
    estimator_Psi_tilde,
    estimator_T,
    fiber_sets,
    log_S_prefixes,
    periodic_values,
    zero_potential,
)
from .symbolic import is_irreducible

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
LEMMA2_TOL = 1e-8


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """12 significant digits; integers verbatim."""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.12g" % x


def _emit(pairs, as_json: bool) -> None:
    if as_json:
        print(json.dumps({k: (v if isinstance(v, (int, str, bool)) or v is None else fmt(v))
                          for k, v in pairs}))
    else:
        width = max(len(k) for k, _ in pairs)
        for k, v in pairs:
            shown = v if isinstance(v, str) else fmt(v) if isinstance(v, (int, float)) else str(v)
            print(f"{k.ljust(width)}  {shown}")


def _load(path):
    spec = load_system(path)
    f = spec.potential if spec.potential is not None else zero_potential(spec.sft)
    return spec, f


# ---------------------------------------------------------------- check

def cmd_check(args) -> int:
    spec, f = _load(args.file)
    X, code = spec.sft, spec.code
    irreducible = is_irreducible(X)
    image_edges = code.image_edges
    realized = {(code.symbol_map[a], code.symbol_map[b]) for a, b in X.edges}
    onto = realized == set(image_edges) and set(code.image_alphabet) == set(code.symbol_map.values())
    pairs = [
        ("system", spec.name),
        ("symbols", len(X)),
        ("trimmed", ",".join(map(str, X.removed)) or "none"),
        ("irreducible", str(irreducible).lower()),
        ("image symbols", len(code.image_alphabet)),
        ("image edges", len(image_edges)),
        ("code onto image", str(onto).lower()),
    ]
    ok = irreducible and onto
    if spec.potential is not None:
        pairs += [
            ("potential window", f"[{f.lo}, {f.hi}]"),
            ("shift constant c", f.shift_constant),
            ("ln M", f.log_bound),
            ("M", f.bound),
        ]
    if spec.point is not None:
        y = spec.point
        try:
            fiber_sets(code, y, y.anchor, max(y.center_end, y.anchor + 1))
            lifts = True
        except NoPreimageError:
            lifts = False
        pairs.append(("point lifts", str(lifts).lower()))
        ok = ok and lifts
    if spec.markov_matrix is not None:
        try:
            MarkovSampler(X, spec.markov_matrix, spec.markov_seed or 0)
            pairs.append(("markov", "valid"))
        except ValueError as exc:
            pairs.append(("markov", f"invalid: {exc}"))
            ok = False
    pairs.append(("hypotheses", "ok" if ok else "violated"))
    _emit(pairs, args.json)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- pressure

ESTIMATORS = {
    "phi": estimator_Phi,
    "inf": estimator_Psi,
    "sup": estimator_Psi_tilde,
    "corollary": corollary_estimator,
    "theta": estimator_T,
}


def cmd_pressure(args) -> int:
    spec, f = _load(args.file)
    code = spec.code
    if args.point:
        if spec.point is None:
            raise UsageError("--point needs a 'point' section in the system file")
        if args.n is None or args.n < 1:
            raise UsageError("--point needs --n N with N >= 1")
        target, n = spec.point, args.n
    else:
        if args.word is None:
            raise UsageError("give --word W or --point --n N")
        try:
            target = split_word(args.word, code.image_alphabet, "--word")
        except SpecError as exc:
            raise UsageError(str(exc)) from None
        if not code.is_image_word(target):
            raise UsageError("--word is not a word of the image presentation")
        n = len(target) if args.n is None else args.n
        if not 1 <= n <= len(target):
            raise UsageError("--n must lie between 1 and the word length")
    modes = ["phi", "inf", "sup", "corollary", "theta"] if args.mode == "all" else [args.mode]
    pairs = [("n", n)]
    for mode in modes:
        if mode == "theta" and not args.point:
            if args.mode == "all":
                continue
            raise UsageError("theta mode needs an eventually periodic point (--point)")
        if mode == "phi":
            pcode, pf = to_pair_form(code, f)
            value = ESTIMATORS[mode](pcode, pf, target, n)
        else:
            value = ESTIMATORS[mode](code, f, target, n)
        pairs.append((mode, value))
    _emit(pairs, args.json)
    return EXIT_OK


# ---------------------------------------------------------------- periodic

def cmd_periodic(args) -> int:
    spec, f = _load(args.file)
    code = spec.code
    try:
        w = split_word(args.cycle, code.image_alphabet, "--cycle")
    except SpecError as exc:
        raise UsageError(str(exc)) from None
    if not code.is_image_word(w + w[:1]):
        raise UsageError("--cycle is not a cycle word of the image presentation")
    pcode, pf = to_pair_form(code, f)
    pv = periodic_values(pcode, pf, w, method=args.method)
    diff = abs(pv.phi_exact - pv.T_exact)
    pairs = [
        ("cycle", "".join(map(str, w)) if all(len(str(c)) == 1 for c in w) else " ".join(map(str, w))),
        ("period", len(w)),
        ("phi_exact", pv.phi_exact),
        ("T_exact", pv.T_exact),
        ("preimages", pv.preimage_count),
        ("reduced size", pv.reduced_size),
        ("method", pv.method),
        ("difference", diff),
    ]
    _emit(pairs, args.json)
    if not diff <= LEMMA2_TOL:
        print(f"error: phi_exact and T_exact differ by {fmt(diff)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------- example1

def _count_text(c: int) -> str:
    if c.bit_length() <= 64:
        return str(c)
    e = (c - 1).bit_length() - 1
    return f"2^{e}+1" if c == 2**e + 1 else f"~2^{c.bit_length() - 1}"


def example1_table(kmax: int, exact_limit: int = 16):
    """Rows ``(k, n_k, count, D, phi, distance, ok)`` for the divergence example.

    Counts are exact big integers for ``k <= exact_limit``; past that they are
    checked in log form against the closed form.
    """
    X, code = ex1.system()
    y = ex1.point(kmax)
    N = ex1.n_k(kmax)
    f = zero_potential(X)
    logS = log_S_prefixes(code, f, y.window(0, N - 1), "phi")
    logD = dn_log_weight_prefixes(code, f, y, N, "inf")
    exact_ks = [k for k in range(1, kmax + 1) if k <= exact_limit]
    lengths = [ex1.n_k(k) for k in exact_ks]
    counts = count_preimage_prefixes(code, y.window(0, lengths[-1] - 1), lengths) if lengths else {}
    dns = dn_count_prefixes(code, y, lengths) if lengths else {}
    rows = []
    for k in range(1, kmax + 1):
        n = ex1.n_k(k)
        if k <= exact_limit:
            count = counts[n]
            count_ok = count == ex1.expected_count(k)
            D = dns[n]
        else:
            e = 2 ** (k - 1)
            closed = e * math.log(2) + math.log1p(2.0**-e)
            count_ok = abs(logS[n - 1] - closed) <= 1e-9 * closed
            count = None
            D = 1 if logD[n - 1] == 0.0 else None
        phi = logS[n - 1] / n
        rows.append(dict(k=k, n=n, count=count, D=D, phi=phi, distance=abs(phi - ex1.LIMIT),
                         theta=logD[n - 1] / n, ok=count_ok and D == 1))
    return rows


def cmd_example1(args) -> int:
    if args.kmax < 1:
        raise UsageError("--kmax must be >= 1")
    t0 = time.perf_counter()
    rows = example1_table(args.kmax, args.exact_limit)
    if args.json:
        for r in rows:
            print(json.dumps({**r, "count": None if r["count"] is None else _count_text(r["count"]),
                              "phi": fmt(r["phi"]), "distance": fmt(r["distance"]), "theta": fmt(r["theta"])}))
    else:
        print(f"{'k':>3} {'n_k':>9} {'|preimages|':>14} {'|D_n|':>6} {'phi estimate':>16} "
              f"{'theta':>6} {'|phi - ln2/4|':>16}")
        for r in rows:
            count = _count_text(r["count"]) if r["count"] is not None else f"2^{2 ** (r['k'] - 1)}+1*"
            print(f"{r['k']:>3} {r['n']:>9} {count:>14} {str(r['D']):>6} {fmt(r['phi']):>16} "
                  f"{fmt(r['theta']):>6} {fmt(r['distance']):>16}")
        if any(r["count"] is None for r in rows):
            print("* checked in log form (beyond the exact big-integer limit)")
        print(f"ln2/4 = {fmt(ex1.LIMIT)}   ({time.perf_counter() - t0:.2f} s)")
    bad = [r["k"] for r in rows if not r["ok"]]
    if bad:
        print(f"error: counts disagree with the closed form at k = {bad}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------- experiment

def _parse_grid(text: str) -> list:
    try:
        grid = [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise UsageError(f"--n-grid: expected comma-separated integers, got {text!r}") from None
    if not grid or min(grid) < 2:
        raise UsageError("--n-grid values must be >= 2")
    return grid


def cmd_experiment(args) -> int:
    spec, f = _load(args.file)
    grid = _parse_grid(args.n_grid)
    seed = args.seed if args.seed is not None else (spec.markov_seed or 0)
    if args.deterministic_point:
        if spec.point is None:
            raise UsageError("--deterministic-point needs a 'point' section")
        report = deterministic_gap_report(spec.code, f, spec.point, grid, spec.name, seed)
    else:
        if spec.markov_matrix is None:
            raise UsageError("the system file has no 'markov' section")
        MarkovSampler(spec.sft, spec.markov_matrix, seed)  # validate early
        if args.samples < 1:
            raise UsageError("--samples must be >= 1")
        report = gap_experiment(spec.code, f, spec.markov_matrix, grid, args.samples, seed,
                                jobs=args.jobs, system=spec.name)
    if args.out:
        write_csv(report, args.out)
        meta = Path(str(args.out) + ".meta.json")
        meta.write_text(json.dumps(report.metadata(), indent=2) + "\n", encoding="utf-8")
    print(f"system {report.system}  rng {report.rng}  seed {report.seed}  samples {report.samples}")
    print(f"{'n':>8} {'q10':>16} {'median':>16} {'q90':>16}   |psi_inf - T|")
    for n, q in report.quantiles().items():
        print(f"{n:>8} {fmt(q['q10']):>16} {fmt(q['median']):>16} {fmt(q['q90']):>16}")
    return EXIT_OK


def cmd_harness(args) -> int:
    kinds = HARNESS_KINDS if args.kind == "all" else (args.kind,)
    ok = True
    for kind in kinds:
        rep = lemma_harness(kind, args.trials, args.seed, args.windows)
        print(rep.summary())
        for failure in rep.failures[: args.show]:
            print("  counterexample:", json.dumps(failure, default=str))
        ok = ok and rep.passed
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relpress", description="Relative pressure of factor codes between SFTs.")
    sub = p.add_subparsers(dest="command", required=True)

    def system_arg(sp):
        sp.add_argument("file", help="system file (JSON); 'example1' selects the bundled example")
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    sp = sub.add_parser("check", help="validate a system file and its hypotheses")
    system_arg(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("pressure", help="finite-n estimators on a word or on the file's point")
    system_arg(sp)
    sp.add_argument("--word", help="image word (characters, or separated symbols)")
    sp.add_argument("--point", action="store_true", help="use y_0 ... y_{n-1} of the file's point")
    sp.add_argument("--n", type=int, help="window length")
    sp.add_argument("--mode", choices=["phi", "inf", "sup", "theta", "corollary", "all"], default="phi")
    sp.set_defaults(func=cmd_pressure)

    sp = sub.add_parser("periodic", help="exact values at a periodic point")
    system_arg(sp)
    sp.add_argument("--cycle", required=True, help="one period of the periodic image point")
    sp.add_argument("--method", choices=["auto", "blocks", "trellis"], default="auto")
    sp.set_defaults(func=cmd_periodic)

    sp = sub.add_parser("example1", help="counts and estimates for the divergence example")
    sp.add_argument("--kmax", type=int, default=6)
    sp.add_argument("--exact-limit", type=int, default=16, help="largest k with exact big-integer counts")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_example1)

    sp = sub.add_parser("experiment", help="sampled gap experiment, CSV output")
    system_arg(sp)
    sp.add_argument("--n-grid", default="100,1000,5000")
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--seed", type=int, help="defaults to the file's markov seed")
    sp.add_argument("--out", help="CSV path (a .meta.json with the RNG setup is written next to it)")
    sp.add_argument("--jobs", type=int, default=None, help="worker processes (default: $RELPRESS_JOBS or 1)")
    sp.add_argument("--deterministic-point", action="store_true", help="use the file's point instead of samples")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("harness", help="randomized identity and inequality checks")
    sp.add_argument("kind", choices=list(HARNESS_KINDS) + ["all"])
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--windows", type=int, default=10, help="windows per trial for the inequality checks")
    sp.add_argument("--show", type=int, default=3, help="counterexamples to print")
    sp.set_defaults(func=cmd_harness)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "file", None) == "example1":
        args.file = bundled_path("example1")
    if getattr(args, "jobs", None) is None and hasattr(args, "jobs"):
        args.jobs = default_jobs()
    try:
        return args.func(args)
    except (SpecError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoPreimageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
