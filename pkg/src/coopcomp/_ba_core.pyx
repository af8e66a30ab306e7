# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the alternating-minimization kernel.

Same contract and update order as ``_ba_pure.solve_masked_mi``; the inner
loop runs in C because typical callers iterate it millions of times over
small tables, where per-call numpy overhead dominates.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, log

cnp.import_array()

DEF LOG2 = 0.6931471805599453


def solve_masked_mi(mask, p_lk_list, weights, q0, double tol=1e-9, int max_iter=10000):
    """See ``_ba_pure.solve_masked_mi`` for parameter semantics."""
    mask_b = np.asarray(mask, dtype=bool)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(mask_b, dtype=np.uint8)
    cdef Py_ssize_t nV = m.shape[0]
    cdef Py_ssize_t nL = m.shape[1]
    cdef Py_ssize_t nT = len(p_lk_list)
    if nT == 0:
        raise ValueError("need at least one objective term")

    sizes = [np.asarray(p, dtype=float).shape[1] for p in p_lk_list]
    cdef Py_ssize_t nKmax = max(sizes)
    p3_np = np.zeros((nT, nL, nKmax))
    for ti, p in enumerate(p_lk_list):
        arr = np.asarray(p, dtype=float)
        if arr.shape[0] != nL:
            raise ValueError("conditioning table row count mismatch")
        p3_np[ti, :, : arr.shape[1]] = arr
    cdef cnp.ndarray[cnp.float64_t, ndim=3] p3 = np.ascontiguousarray(p3_np)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nK = np.asarray(sizes, dtype=np.int64)

    w_np = np.asarray(weights, dtype=float)
    cdef double wsum = float(w_np.sum())
    if wsum <= 0.0:
        raise ValueError("weights must include a positive entry")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(w_np)

    q_np = np.where(mask_b, np.asarray(q0, dtype=float), 0.0)
    col = q_np.sum(axis=0)
    if np.any(col <= 0.0):
        raise ValueError("initial channel has an empty masked column")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] q = np.ascontiguousarray(q_np / col)

    # per-term conditioning weights p(k|l) and the zero-l pin mask
    pl_t_np = p3_np.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        cond_np = np.where(pl_t_np[:, :, None] > 0.0, p3_np / np.maximum(pl_t_np[:, :, None], 1e-300), 0.0)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] cond = np.ascontiguousarray(cond_np)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pl = np.ascontiguousarray(pl_t_np[0])
    cdef cnp.ndarray[cnp.float64_t, ndim=2] uniform = np.ascontiguousarray(
        mask_b.astype(float) / np.maximum(mask_b.sum(axis=0, dtype=float), 1.0)
    )

    cdef cnp.ndarray[cnp.float64_t, ndim=3] r = np.zeros((nT, nV, nKmax))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] score = np.zeros((nV, nL))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pk = np.zeros(nKmax)

    cdef double value = INFINITY
    cdef double new_value, s, best, norm, acc, lq, lr, pkk
    cdef Py_ssize_t it, t, v, l, k
    cdef int iters = 0

    for it in range(1, max_iter + 1):
        iters = it
        # --- channel update -------------------------------------------------
        _references(r, q, p3, nK, pk, nT, nV, nL)
        for v in range(nV):
            for l in range(nL):
                score[v, l] = -INFINITY
        for l in range(nL):
            for v in range(nV):
                if not m[v, l]:
                    continue
                s = 0.0
                for t in range(nT):
                    if w[t] == 0.0:
                        continue
                    acc = 0.0
                    for k in range(nK[t]):
                        if cond[t, l, k] > 0.0:
                            if r[t, v, k] > 0.0:
                                acc += cond[t, l, k] * log(r[t, v, k])
                            else:
                                acc = -INFINITY
                                break
                    if acc == -INFINITY:
                        s = -INFINITY
                        break
                    s += (w[t] / wsum) * acc
                score[v, l] = s
        for l in range(nL):
            if pl[l] <= 0.0:
                for v in range(nV):
                    q[v, l] = uniform[v, l]
                continue
            best = -INFINITY
            for v in range(nV):
                if score[v, l] > best:
                    best = score[v, l]
            if best == -INFINITY:
                continue  # unreachable for pl > 0; keep previous column
            norm = 0.0
            for v in range(nV):
                if score[v, l] == -INFINITY:
                    q[v, l] = 0.0
                else:
                    q[v, l] = exp(score[v, l] - best)
                norm += q[v, l]
            for v in range(nV):
                q[v, l] /= norm
        # --- objective -------------------------------------------------------
        _references(r, q, p3, nK, pk, nT, nV, nL)
        new_value = 0.0
        for t in range(nT):
            if w[t] == 0.0:
                continue
            acc = 0.0
            for l in range(nL):
                for v in range(nV):
                    if q[v, l] <= 0.0:
                        continue
                    lq = log(q[v, l])
                    for k in range(nK[t]):
                        if p3[t, l, k] > 0.0:
                            acc += p3[t, l, k] * q[v, l] * (lq - log(r[t, v, k]))
            new_value += w[t] * acc
        new_value /= LOG2
        if value - new_value < tol and new_value <= value + 1e-15:
            value = new_value
            break
        value = new_value

    return value, np.asarray(q), iters


cdef void _references(
    cnp.float64_t[:, :, ::1] r,
    cnp.float64_t[:, ::1] q,
    cnp.float64_t[:, :, ::1] p3,
    cnp.int64_t[::1] nK,
    cnp.float64_t[::1] pk,
    Py_ssize_t nT,
    Py_ssize_t nV,
    Py_ssize_t nL,
) noexcept:
    cdef Py_ssize_t t, v, l, k
    cdef double acc
    for t in range(nT):
        for k in range(nK[t]):
            pk[k] = 0.0
            for l in range(nL):
                pk[k] += p3[t, l, k]
        for v in range(nV):
            for k in range(nK[t]):
                if pk[k] > 0.0:
                    acc = 0.0
                    for l in range(nL):
                        acc += q[v, l] * p3[t, l, k]
                    r[t, v, k] = acc / pk[k]
                else:
                    r[t, v, k] = 0.0
