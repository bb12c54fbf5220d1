"""Sampling experiments and randomized property harnesses.

Samples are drawn from a Markov chain on X and pushed through the code, so
the image sequences are typical for an invariant measure on the image. Every
sample has its own generator, derived from ``(seed, sample_id)``, so results
do not depend on the number of worker processes.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .potential import LocallyConstantPotential, pair_weight, recode_potential, to_pair_form
from .pressure import (
    dn_log_weight,
    dn_log_weight_prefixes,
    gamma,
    log_S,
    periodic_matrix,
    periodic_values,
)
from .symbolic import (
    EventuallyPeriodicPoint,
    FactorCode,
    Sft,
    count_preimage_blocks,
    higher_block_recode,
    random_cycle,
    random_irreducible_sft,
    random_onto_code,
    shortest_connector,
)

RNG_NAME = "numpy.PCG64"
BRUTE_CAP = 50_000_000  # largest preimage set enumerated by the brute-force cross-checks
_CHUNK = 1 << 20
CSV_COLUMNS = ("seed", "sample_id", "n", "psi_inf", "psi_sup", "phi", "theta",
               "T_exact", "phi_exact", "gap_psi_T")


def make_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


class MarkovSampler:
    """Markov chain on an SFT with transition matrix ``P`` (rows in alphabet order)."""

    def __init__(self, X: Sft, P, seed: int = 0):
        P = np.asarray(P, dtype=float)
        n = len(X)
        if P.shape != (n, n):
            raise ValueError(f"transition matrix must be {n}x{n}")
        if (P < 0).any():
            raise ValueError("transition probabilities must be nonnegative")
        if np.abs(P.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("rows of the transition matrix must sum to 1")
        if not np.array_equal(P > 0, X.adjacency.astype(bool)):
            raise ValueError("transition matrix support must equal the allowed edges")
        self.sft, self.P, self.seed = X, P, int(seed)
        M = np.vstack([P.T - np.eye(n), np.ones((1, n))])
        rhs = np.zeros(n + 1)
        rhs[-1] = 1.0
        p = np.linalg.lstsq(M, rhs, rcond=None)[0]
        if np.abs(p @ P - p).max() > 1e-10 or (p < -1e-12).any():
            raise ValueError("no unique stationary vector (is the SFT irreducible?)")
        self.stationary = np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()
        self._cum = np.cumsum(P, axis=1)

    @classmethod
    def uniform(cls, X: Sft, seed: int = 0) -> "MarkovSampler":
        P = X.adjacency.astype(float)
        return cls(X, P / P.sum(axis=1, keepdims=True), seed)

    def sample(self, n: int, sample_id: int = 0) -> tuple:
        """``x_0 ... x_{n-1}`` started from the stationary vector."""
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = make_rng(self.seed, sample_id)
        u = rng.random(n)
        alphabet = self.sft.alphabet
        cum_p = np.cumsum(self.stationary)
        i = min(int(np.searchsorted(cum_p, u[0], side="right")), len(alphabet) - 1)
        out = [i]
        cum = self._cum
        last = len(alphabet) - 1
        for r in u[1:]:
            i = min(int(np.searchsorted(cum[i], r, side="right")), last)
            out.append(i)
        return tuple(alphabet[j] for j in out)


def periodize(X: Sft, x: Sequence) -> tuple:
    """Close an X-block into a cycle with the shortest least connector."""
    x = tuple(x)
    return x + shortest_connector(X, x[-1], x[0])


def sample_point(sampler: MarkovSampler, code: FactorCode, n: int, periodization: bool = False,
                 sample_id: int = 0):
    """Image of a sampled block; with ``periodization`` the periodic image point.

    The cycle is closed inside X, so the periodic image point always lifts to
    a periodic point of X. Its first ``n`` symbols are the sampled window.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    x = sampler.sample(n, sample_id)
    if not periodization:
        return code(x)
    return EventuallyPeriodicPoint.periodic(code(periodize(sampler.sft, x)))


@dataclass
class GapReport:
    system: str
    n_grid: tuple
    seed: int
    samples: int
    rows: list = field(default_factory=list)
    rng: str = RNG_NAME

    def gaps(self, n: int) -> np.ndarray:
        return np.array(sorted(abs(r["gap_psi_T"]) for r in self.rows if r["n"] == n))

    def quantiles(self) -> dict:
        out = {}
        for n in self.n_grid:
            g = self.gaps(n)
            g = g[np.isfinite(g)]
            if len(g):
                q = np.quantile(g, [0.1, 0.5, 0.9])
                out[n] = {"q10": float(q[0]), "median": float(q[1]), "q90": float(q[2]), "count": len(g)}
        return out

    def medians(self) -> dict:
        return {n: v["median"] for n, v in self.quantiles().items()}

    def metadata(self) -> dict:
        return {"system": self.system, "rng": self.rng, "seed": self.seed,
                "samples": self.samples, "n_grid": list(self.n_grid)}


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.12g" % v


def write_csv(report: GapReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in report.rows:
            fh.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")


def _pair_system(code: FactorCode, f: LocallyConstantPotential):
    return to_pair_form(code, f)


def _sample_rows(task) -> list:
    code, f, P, seed, sample_id, n_grid = task
    X = code.domain
    sampler = MarkovSampler(X, P, seed)
    pcode, pf = _pair_system(code, f)
    x = sampler.sample(max(n_grid), sample_id)
    rows = []
    for n in n_grid:
        window = code(x[:n])
        w = code(periodize(X, x[:n]))
        y = EventuallyPeriodicPoint.periodic(w)
        psi_inf = log_S(code, f, window, "inf") / n
        psi_sup = log_S(code, f, window, "sup") / n
        phi = log_S(pcode, pf, window, "phi") / n
        theta = dn_log_weight(code, f, y, n, "inf") / n
        pv = periodic_values(pcode, pf, w, diagnostics=False)
        rows.append(dict(seed=seed, sample_id=sample_id, n=n, psi_inf=psi_inf, psi_sup=psi_sup,
                         phi=phi, theta=theta, T_exact=pv.T_exact, phi_exact=pv.phi_exact,
                         gap_psi_T=psi_inf - pv.T_exact))
    return rows


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("RELPRESS_JOBS", "1")))
    except ValueError:
        return 1


def gap_experiment(code: FactorCode, f: LocallyConstantPotential | None, P, n_grid: Sequence[int],
                   samples: int, seed: int, jobs: int | None = None, system: str = "system") -> GapReport:
    """Finite-n gaps between the finite-range estimators and the exact periodic value."""
    n_grid = tuple(sorted(set(int(n) for n in n_grid)))
    if not n_grid or n_grid[0] < 2:
        raise ValueError("n grid values must be >= 2")
    if f is None:
        f = LocallyConstantPotential.constant(code.domain, 0.0)
    tasks = [(code, f, P, seed, i, n_grid) for i in range(samples)]
    jobs = default_jobs() if jobs is None else max(1, jobs)
    if jobs == 1 or samples <= 1:
        chunks = [_sample_rows(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_sample_rows, tasks))
    report = GapReport(system, n_grid, seed, samples)
    for rows in chunks:
        report.rows.extend(rows)
    return report


def deterministic_gap_report(code: FactorCode, f, y: EventuallyPeriodicPoint, n_grid: Sequence[int],
                             system: str = "system", seed: int = 0) -> GapReport:
    """Same table for one fixed point; the theta column stands in for the exact value."""
    if f is None:
        f = LocallyConstantPotential.constant(code.domain, 0.0)
    pcode, pf = _pair_system(code, f)
    n_grid = tuple(sorted(set(int(n) for n in n_grid)))
    nmax = n_grid[-1]
    window = y.window(0, nmax - 1)
    theta = dn_log_weight_prefixes(code, f, y, nmax, "inf")
    report = GapReport(system, n_grid, seed, 1)
    for n in n_grid:
        psi_inf = log_S(code, f, window[:n], "inf") / n
        t = theta[n - 1] / n
        report.rows.append(dict(
            seed=seed, sample_id=0, n=n, psi_inf=psi_inf,
            psi_sup=log_S(code, f, window[:n], "sup") / n,
            phi=log_S(pcode, pf, window[:n], "phi") / n, theta=t,
            T_exact=math.nan, phi_exact=math.nan, gap_psi_T=psi_inf - t,
        ))
    return report


# ---------------------------------------------------------------- harness

@dataclass
class Instance:
    code: FactorCode
    f: LocallyConstantPotential
    cycle: tuple

    def describe(self) -> dict:
        X = self.code.domain
        return {
            "alphabet_x": [str(a) for a in X.alphabet],
            "edges_x": sorted([str(a), str(b)] for a, b in X.edges),
            "code": {str(a): self.code.symbol_map[a] for a in X.alphabet},
            "potential": {"window": [self.f.lo, self.f.hi],
                          "table": {" ".join(map(str, w)): v for w, v in sorted(self.f.table.items())},
                          "normalize": False},
            "cycle": list(self.cycle),
        }


def random_instance(rng, max_symbols: int = 6, max_q: int = 5, window=(0, 1)) -> Instance:
    """Random irreducible SFT, onto code, pair potential with values in [0, ln 2], cycle word."""
    while True:
        X = random_irreducible_sft(rng, max_symbols=max_symbols)
        code = random_onto_code(rng, X)
        lo, hi = window
        f = LocallyConstantPotential.from_function(X, lo, hi, lambda w: float(rng.random()) * math.log(2))
        # periodic SFTs have no cycles of some lengths: redraw q a few times
        for _ in range(10):
            q = int(rng.integers(1, max_q + 1))
            try:
                return Instance(code, f, code(random_cycle(rng, X, q, tries=200)))
            except RuntimeError:
                continue


@dataclass
class HarnessReport:
    kind: str
    trials: int
    checks: int = 0
    failures: list = field(default_factory=list)
    max_error: float = 0.0
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{self.kind}: {verdict} ({self.checks} checks over {self.trials} trials, "
                f"{len(self.failures)} failures, {self.skipped} skipped, max error {self.max_error:.3g})")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=str)


def _rel_err(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(math.expm1(a - b))


def enumerated_log_sum(code: FactorCode, f: LocallyConstantPotential, v: Sequence) -> float:
    """ln of the sum of pair weights over every preimage block of ``v``, one path at a time.

    No two paths are ever merged, so this is an independent check on the
    transfer recursions. Paths are expanded breadth-first in chunks of
    ``_CHUNK`` to bound memory.
    """
    X = code.domain
    F = pair_weight(f)
    v = tuple(v)
    S = len(X)
    # per image letter: successor table restricted to its fiber, padded with -1
    tables = {}
    for c in set(v[1:]):
        rows = [[X.index[b] for b in X.successors[a] if code.symbol_map[b] == c] for a in X.alphabet]
        width = max(1, max(len(r) for r in rows))
        nxt = np.full((S, width), -1, dtype=np.int64)
        for i, r in enumerate(rows):
            nxt[i, : len(r)] = r
        tables[c] = (nxt, np.array([len(r) for r in rows]))
    logF = np.full((S, S), -np.inf)
    for a, b in X.edges:
        logF[X.index[a], X.index[b]] = F.log(a, b)
    total = 0.0

    def expand(last, logw, j):
        nonlocal total
        if j == len(v):
            total += float(np.exp(logw).sum())
            return
        nxt, counts = tables[v[j]]
        c = counts[last]
        src = np.repeat(np.arange(len(last)), c)
        offset = np.arange(len(src)) - np.repeat(np.cumsum(c) - c, c)
        new_last = nxt[last[src], offset]
        new_w = logw[src] + logF[last[src], new_last]
        for k in range(0, len(new_last), _CHUNK):
            expand(new_last[k : k + _CHUNK], new_w[k : k + _CHUNK], j + 1)

    start = np.array([X.index[a] for a in code.fibers[v[0]]], dtype=np.int64)
    expand(start, np.zeros(len(start)), 1)
    return math.log(total) if total > 0 else -math.inf


def _check_lemma2(inst: Instance, rep: HarnessReport) -> None:
    code, f, w = inst.code, inst.f, inst.cycle
    pv = periodic_values(code, f, w, method="blocks")
    err = abs(pv.phi_exact - pv.T_exact)
    rep.checks += 1
    rep.max_error = max(rep.max_error, err)
    if not err <= 1e-8:
        rep.failures.append({"instance": inst.describe(), "phi_exact": pv.phi_exact, "T_exact": pv.T_exact})
    A = periodic_matrix(code, f, w)
    q = len(w)
    for n in range(1, 12 // q + 1):
        word = w * n
        if count_preimage_blocks(code, word) > BRUTE_CAP:
            rep.skipped += 1
            continue
        ref = enumerated_log_sum(code, f, word)
        err = _rel_err(A.path_log_sum(n), ref)
        rep.checks += 1
        rep.max_error = max(rep.max_error, err)
        if not err <= 1e-9:
            rep.failures.append({"instance": inst.describe(), "n": n, "path_sum": A.path_log_sum(n), "brute": ref})


def _check_lemma4(inst: Instance, rep: HarnessReport) -> None:
    code, f, w = inst.code, inst.f, inst.cycle
    y = EventuallyPeriodicPoint.periodic(w)
    q = len(w)
    for b in code.fibers[w[0]]:
        base = gamma(code, f, y, b, b, q)
        for k in range(1, 6):
            rep.checks += 1
            lhs = k * base if base != -math.inf else -math.inf
            rhs = gamma(code, f, y, b, b, q * k)
            if lhs == -math.inf:
                continue
            rep.max_error = max(rep.max_error, lhs - rhs)
            if not lhs <= rhs + 1e-9:
                rep.failures.append({"instance": inst.describe(), "b": str(b), "k": k, "lhs": lhs, "rhs": rhs})


def _sample_image_word(rng, code: FactorCode, n: int) -> tuple:
    X = code.domain
    x = [X.alphabet[int(rng.integers(len(X)))]]
    for _ in range(n - 1):
        succ = X.successors[x[-1]]
        x.append(succ[int(rng.integers(len(succ)))])
    return code(x)


def _check_monotonicity(inst: Instance, rep: HarnessReport, rng, windows: int) -> None:
    code, f = inst.code, inst.f
    lnA = math.log(len(code.domain))
    lnM = f.log_bound
    for _ in range(windows):
        n = int(rng.integers(2, 13))
        v = _sample_image_word(rng, code, n)
        lhs = log_S(code, f, v, "phi")
        rhs = lnA + lnM + log_S(code, f, v[1:], "phi")
        rep.checks += 1
        rep.max_error = max(rep.max_error, lhs - rhs)
        if not lhs <= rhs + 1e-9:
            rep.failures.append({"instance": inst.describe(), "word": list(v), "lhs": lhs, "rhs": rhs})
    # the D_n sums never decrease along n
    y = EventuallyPeriodicPoint.periodic(inst.cycle)
    tau = dn_log_weight_prefixes(code, f, y, 40, "inf")
    rep.checks += 1
    drop = float(np.max(tau[:-1] - tau[1:]))
    rep.max_error = max(rep.max_error, drop)
    if not drop <= 1e-9:
        rep.failures.append({"instance": inst.describe(), "tau": tau.tolist()})


def _check_domination(inst: Instance, rep: HarnessReport, rng, windows: int) -> None:
    code, f = inst.code, inst.f
    y = EventuallyPeriodicPoint.periodic(inst.cycle)
    ns = rng.integers(1, 60, size=windows)
    tau = dn_log_weight_prefixes(code, f, y, int(ns.max()), "inf")
    for n in ns:
        n = int(n)
        lhs = tau[n - 1]
        rhs = log_S(code, f, y.window(0, n - 1), "inf")
        rep.checks += 1
        rep.max_error = max(rep.max_error, lhs - rhs)
        if not lhs <= rhs + 1e-9:
            rep.failures.append({"instance": inst.describe(), "n": n, "theta_sum": lhs, "S_sum": rhs})


def _check_subadditivity(inst: Instance, rep: HarnessReport, rng, windows: int) -> None:
    code, f, w = inst.code, inst.f, inst.cycle
    lnM = f.log_bound
    cache = {}

    def S(k):
        if k not in cache:
            cache[k] = log_S(code, f, w * k, "phi")
        return cache[k]

    for _ in range(windows):
        n, m = (int(v) for v in rng.integers(1, 9, size=2))
        lhs = S(n + m)
        rhs = lnM + S(n) + S(m)
        rep.checks += 1
        rep.max_error = max(rep.max_error, lhs - rhs)
        if not lhs <= rhs + 1e-9:
            rep.failures.append({"instance": inst.describe(), "n": n, "m": m, "lhs": lhs, "rhs": rhs})


def _check_mode_gap(inst: Instance, rep: HarnessReport, rng, windows: int) -> None:
    code, f = inst.code, inst.f
    lnM = f.log_bound
    for _ in range(windows):
        n = int(rng.integers(1, 40))
        v = _sample_image_word(rng, code, n)
        gap = abs(log_S(code, f, v, "inf") - log_S(code, f, v, "phi")) / n
        rep.checks += 1
        rep.max_error = max(rep.max_error, gap - lnM / n)
        if not gap <= lnM / n + 1e-12:
            rep.failures.append({"instance": inst.describe(), "word": list(v), "gap": gap, "bound": lnM / n})


def _check_recoding(inst: Instance, rep: HarnessReport) -> None:
    """Periodic values survive 2-block recoding, with and without recoding the image."""
    code, f, w = inst.code, inst.f, inst.cycle
    base = periodic_values(code, f, w, method="blocks")
    q = len(w)
    for anchor in (0, None):
        Xk, code_k, dictionary = higher_block_recode(code.domain, code, 2, anchor=anchor)
        f_k = recode_potential(f, Xk, dictionary)
        w_k = w if anchor is not None else tuple((w[i], w[(i + 1) % q]) for i in range(q))
        other = periodic_values(code_k, f_k, w_k, method="blocks")
        err = max(abs(base.phi_exact - other.phi_exact), abs(base.T_exact - other.T_exact))
        rep.checks += 1
        rep.max_error = max(rep.max_error, err)
        if not err <= 1e-9:
            rep.failures.append({"instance": inst.describe(), "anchor": anchor,
                                 "before": asdict(base), "after": asdict(other)})


HARNESS_KINDS = ("lemma2", "lemma4", "monotonicity", "domination", "subadditivity", "mode_gap",
                 "recoding")


def lemma_harness(kind: str, trials: int, seed: int, windows_per_trial: int = 10,
                  max_symbols: int = 6) -> HarnessReport:
    """Randomized check of one identity or inequality; failures carry the instance."""
    if kind not in HARNESS_KINDS:
        raise ValueError(f"unknown harness {kind!r}; choose from {', '.join(HARNESS_KINDS)}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rep = HarnessReport(kind, trials)
    for t in range(trials):
        rng = make_rng(seed, t)
        inst = random_instance(rng, max_symbols=max_symbols)
        if kind == "lemma2":
            _check_lemma2(inst, rep)
        elif kind == "lemma4":
            _check_lemma4(inst, rep)
        elif kind == "monotonicity":
            _check_monotonicity(inst, rep, rng, windows_per_trial)
        elif kind == "domination":
            _check_domination(inst, rep, rng, windows_per_trial)
        elif kind == "subadditivity":
            _check_subadditivity(inst, rep, rng, windows_per_trial)
        elif kind == "recoding":
            _check_recoding(inst, rep)
        else:
            _check_mode_gap(inst, rep, rng, windows_per_trial)
    return rep


__all__ = [
    "CSV_COLUMNS", "GapReport", "HarnessReport", "HARNESS_KINDS", "Instance", "MarkovSampler",
    "RNG_NAME", "deterministic_gap_report", "enumerated_log_sum", "gap_experiment", "lemma_harness", "make_rng",
    "periodize", "random_instance", "sample_point", "write_csv",
]
