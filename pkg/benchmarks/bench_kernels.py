"""Compare the compiled and pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 100000] [--repeat 3]

Both backends run the transfer sweep behind ``log_S`` and the extendability
sweep behind ``fiber_sets`` on a prefix of the divergence example's point,
plus a random 6-symbol system with a pair potential. Results are checked for
agreement before timings are printed.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from relpress import example1 as ex1
from relpress import kernels
from relpress.experiments import MarkovSampler, make_rng, random_instance
from relpress.pressure import _image_indices, _masks_for, trellis


def _forward_args(code, f, v, mode="phi"):
    tr = trellis(code, f, mode)
    v_idx = _image_indices(code, v)
    ok = np.all(tr.state_words == v_idx[: tr.k][None, :], axis=1)
    init = np.where(ok, tr.left_base, -np.inf)
    steps = np.ascontiguousarray(v_idx[tr.k - 1 :], dtype=np.int32)
    return (steps, tr.state_image, tr.indptr, tr.indices, tr.log_weights, init,
            np.zeros(len(steps), dtype=np.int32), tr.right_base[None, :].copy(), False)


def _time(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    X, code = ex1.system()
    y = ex1.point(ex1.kmax_for(args.n))
    v = y.window(0, args.n - 1)

    rng = make_rng(5)
    inst = random_instance(rng, max_symbols=6)
    sampler = MarkovSampler.uniform(inst.code.domain, seed=5)
    w = inst.code(sampler.sample(args.n))

    fib, succ, _, full = _masks_for(code)
    cases = [
        ("forward, divergence example", _forward_args(code, None, v), "forward"),
        ("forward, random pair potential", _forward_args(inst.code, inst.f, w), "forward"),
        ("forward, random inf mode", _forward_args(inst.code, inst.f, w, "inf"), "forward"),
        ("mask sweep, divergence example", (_image_indices(code, v), fib, succ, np.uint64(full), False), "mask_sweep"),
    ]
    impls = kernels.backends()
    if "cython" not in impls:
        print("compiled extension not built; only the Python backend is available")
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'case':<34}" + "".join(f"{name:>12}" for name in impls) + f"{'speedup':>10}")
    for label, fargs, fn_name in cases:
        times, results = {}, {}
        for name, mod in impls.items():
            times[name], results[name] = _time(getattr(mod, fn_name), fargs, args.repeat)
        if len(results) == 2:
            a, b = results["cython"], results["python"]
            if fn_name == "forward":
                assert np.allclose(a[0], b[0], rtol=1e-12, atol=1e-9, equal_nan=True), label
            else:
                assert np.array_equal(a, b), label
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<34}" + "".join(f"{times[n]:>11.4f}s" for n in impls) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
