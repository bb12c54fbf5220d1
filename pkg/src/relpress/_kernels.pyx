# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: the fiber transfer sweep and the extendability sweep."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, exp, INFINITY

cnp.import_array()

ctypedef cnp.uint64_t u64


cdef inline double _logadd(double a, double b) nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a > b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


def forward(const int[:] steps, const int[:] state_image,
            const long[:] indptr, const int[:] indices, const double[:] log_weights,
            const double[:] init_log, const int[:] end_ids, const double[:, :] end_log,
            bint record):
    """Log-domain forward pass over the fiber trellis.

    Returns ``(totals, vector, log_scale)``: ``totals[j]`` is the log of the
    end-weighted mass after step ``j`` (only the last entry is filled unless
    ``record``); ``vector + log_scale`` is the final log frontier, with
    ``max(vector) == 0``.
    """
    cdef Py_ssize_t T = steps.shape[0]
    cdef Py_ssize_t S = state_image.shape[0]
    cdef Py_ssize_t j, a, e, s, t, n_act, n_new
    cdef double m, acc, log_scale, total, x
    cdef int img, eid
    cdef cnp.ndarray[double, ndim=1] v_arr = np.full(S, -INFINITY)
    cdef cnp.ndarray[double, ndim=1] w_arr = np.full(S, -INFINITY)
    cdef cnp.ndarray[long, ndim=1] act_arr = np.empty(S, dtype=np.int_)
    cdef cnp.ndarray[long, ndim=1] nxt_arr = np.empty(S, dtype=np.int_)
    cdef double[:] v = v_arr
    cdef double[:] w = w_arr
    cdef long[:] act = act_arr
    cdef long[:] nxt = nxt_arr
    cdef long[:] swap
    cdef cnp.ndarray[double, ndim=1] totals_arr = np.full(T, -INFINITY)
    cdef double[:] totals = totals_arr

    m = -INFINITY
    for s in range(S):
        if init_log[s] > m:
            m = init_log[s]
    if m == -INFINITY or T == 0:
        return totals_arr, v_arr, -INFINITY
    log_scale = m
    n_act = 0
    for s in range(S):
        if init_log[s] != -INFINITY:
            v[s] = init_log[s] - m
            act[n_act] = s
            n_act += 1

    for j in range(T):
        if j > 0:
            img = steps[j]
            n_new = 0
            for a in range(n_act):
                s = act[a]
                acc = v[s]
                for e in range(indptr[s], indptr[s + 1]):
                    t = indices[e]
                    if state_image[t] == img:
                        if w[t] == -INFINITY:
                            nxt[n_new] = t
                            n_new += 1
                        w[t] = _logadd(w[t], acc + log_weights[e])
                v[s] = -INFINITY
            if n_new == 0:
                return totals_arr, v_arr, -INFINITY
            m = -INFINITY
            for a in range(n_new):
                if w[nxt[a]] > m:
                    m = w[nxt[a]]
            for a in range(n_new):
                t = nxt[a]
                v[t] = w[t] - m
                w[t] = -INFINITY
            swap = act
            act = nxt
            nxt = swap
            n_act = n_new
            log_scale += m
        if record or j == T - 1:
            eid = end_ids[j]
            total = -INFINITY
            for a in range(n_act):
                x = end_log[eid, act[a]]
                if x != -INFINITY:
                    total = _logadd(total, v[act[a]] + x)
            if total != -INFINITY:
                totals[j] = total + log_scale
    return totals_arr, v_arr, log_scale


def mask_sweep(const int[:] seq, const u64[:] fiber_masks, const u64[:] nbr_masks,
               u64 start, bint reverse):
    """Propagate a symbol set along ``seq``: ``out[j] = fiber(seq[j]) & N(prev)``.

    ``N(S)`` is the union of ``nbr_masks`` over the members of ``S``; with
    ``reverse`` the sweep runs from the last position to the first.
    """
    cdef Py_ssize_t n = seq.shape[0]
    cdef Py_ssize_t nsym = nbr_masks.shape[0]
    cdef Py_ssize_t j, idx, b
    cdef u64 prev = start, spread, bits
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out_arr = np.zeros(n, dtype=np.uint64)
    cdef u64[:] out = out_arr
    for idx in range(n):
        j = n - 1 - idx if reverse else idx
        spread = 0
        bits = prev
        b = 0
        while bits != 0 and b < nsym:
            if bits & 1:
                spread |= nbr_masks[b]
            bits >>= 1
            b += 1
        prev = fiber_masks[seq[j]] & spread
        out[j] = prev
    return out_arr
