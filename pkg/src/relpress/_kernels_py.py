"""Pure-Python twins of the compiled kernels (same signatures, same results)."""

import math

import numpy as np

NEG_INF = -math.inf


def _logadd(a, b):
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def forward(steps, state_image, indptr, indices, log_weights, init_log,
            end_ids, end_log, record):
    T = len(steps)
    S = len(state_image)
    totals = np.full(T, NEG_INF)
    state_image = [int(c) for c in state_image]
    rows = [
        [(int(indices[e]), float(log_weights[e])) for e in range(indptr[s], indptr[s + 1])]
        for s in range(S)
    ]
    init = [float(x) for x in init_log]
    m = max(init, default=NEG_INF)
    if m == NEG_INF or T == 0:
        return totals, np.full(S, NEG_INF), NEG_INF
    log_scale = m
    v = {s: x - m for s, x in enumerate(init) if x != NEG_INF}
    end_rows = [list(map(float, row)) for row in end_log]
    for j in range(T):
        if j > 0:
            img = steps[j]
            new = {}
            for s, acc in v.items():
                for t, wt in rows[s]:
                    if state_image[t] == img:
                        new[t] = _logadd(new.get(t, NEG_INF), acc + wt)
            if not new:
                return totals, np.full(S, NEG_INF), NEG_INF
            m = max(new.values())
            v = {t: x - m for t, x in new.items()}
            log_scale += m
        if record or j == T - 1:
            row = end_rows[end_ids[j]]
            total = NEG_INF
            for t, x in v.items():
                if row[t] != NEG_INF:
                    total = _logadd(total, x + row[t])
            if total != NEG_INF:
                totals[j] = total + log_scale
    vec = np.full(S, NEG_INF)
    for t, x in v.items():
        vec[t] = x
    return totals, vec, log_scale


def mask_sweep(seq, fiber_masks, nbr_masks, start, reverse):
    n = len(seq)
    out = np.zeros(n, dtype=np.uint64)
    fib = [int(x) for x in fiber_masks]
    nbr = [int(x) for x in nbr_masks]
    prev = int(start)
    order = range(n - 1, -1, -1) if reverse else range(n)
    for j in order:
        spread = 0
        bits = prev
        b = 0
        while bits:
            if bits & 1:
                spread |= nbr[b]
            bits >>= 1
            b += 1
        prev = fib[seq[j]] & spread
        out[j] = prev
    return out
