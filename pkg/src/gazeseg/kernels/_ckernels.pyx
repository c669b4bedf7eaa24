# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the SLIC assignment/update loop and the stump scan.

The float expressions mirror the NumPy fallbacks term for term (and the
extension is compiled with -ffp-contract=off), so both backends agree
bit-for-bit.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def slic_iterate(double[:, :, ::1] lab, double[:, ::1] centers_in,
                 int step, double invm2, int iters):
    """See gazeseg.kernels.slic_py.slic_iterate."""
    cdef Py_ssize_t H = lab.shape[0]
    cdef Py_ssize_t W = lab.shape[1]
    cdef Py_ssize_t K = centers_in.shape[0]

    labels_arr = np.full((H, W), -1, dtype=np.int32)
    cdef int[:, ::1] labels = labels_arr
    dist_arr = np.empty((H, W), dtype=np.float64)
    cdef double[:, ::1] dist = dist_arr
    centers_arr = np.array(centers_in, dtype=np.float64, copy=True)
    cdef double[:, ::1] centers = centers_arr

    acc_arr = np.zeros((6, K), dtype=np.float64)
    cdef double[:, ::1] acc = acc_arr

    cdef double INF = float("inf")
    cdef Py_ssize_t it, k, y, x, x0, x1, y0, y1
    cdef int lbl
    cdef double cl, ca, cb, cx, cy, dl, da, db, ddx, ddy, d, sp

    for it in range(iters):
        for y in range(H):
            for x in range(W):
                dist[y, x] = INF
        for k in range(K):
            cl = centers[k, 0]
            ca = centers[k, 1]
            cb = centers[k, 2]
            cx = centers[k, 3]
            cy = centers[k, 4]
            x0 = <Py_ssize_t>cx - step
            if x0 < 0:
                x0 = 0
            x1 = <Py_ssize_t>cx + step + 1
            if x1 > W:
                x1 = W
            y0 = <Py_ssize_t>cy - step
            if y0 < 0:
                y0 = 0
            y1 = <Py_ssize_t>cy + step + 1
            if y1 > H:
                y1 = H
            for y in range(y0, y1):
                ddy = <double>y - cy
                for x in range(x0, x1):
                    dl = lab[y, x, 0] - cl
                    da = lab[y, x, 1] - ca
                    db = lab[y, x, 2] - cb
                    ddx = <double>x - cx
                    sp = (ddx * ddx + ddy * ddy) * invm2
                    d = dl * dl + da * da + db * db + sp
                    if d < dist[y, x]:
                        dist[y, x] = d
                        labels[y, x] = <int>k

        for k in range(K):
            acc[0, k] = 0.0
            acc[1, k] = 0.0
            acc[2, k] = 0.0
            acc[3, k] = 0.0
            acc[4, k] = 0.0
            acc[5, k] = 0.0
        for y in range(H):
            for x in range(W):
                lbl = labels[y, x]
                if lbl >= 0:
                    acc[0, lbl] += 1.0
                    acc[1, lbl] += lab[y, x, 0]
                    acc[2, lbl] += lab[y, x, 1]
                    acc[3, lbl] += lab[y, x, 2]
                    acc[4, lbl] += <double>x
                    acc[5, lbl] += <double>y
        for k in range(K):
            if acc[0, k] > 0.0:
                centers[k, 0] = acc[1, k] / acc[0, k]
                centers[k, 1] = acc[2, k] / acc[0, k]
                centers[k, 2] = acc[3, k] / acc[0, k]
                centers[k, 3] = acc[4, k] / acc[0, k]
                centers[k, 4] = acc[5, k] / acc[0, k]

    return labels_arr


def stump_scan(double[:, ::1] X, double[::1] r, long long[:, ::1] order,
               thr_flat=None, thr_off=None):
    """See gazeseg.kernels.stump_py.stump_scan."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]

    xs_arr = np.empty(n, dtype=np.float64)
    ps_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] xs = xs_arr
    cdef double[::1] ps = ps_arr

    cdef bint use_quantiles = thr_flat is not None
    cdef double[::1] tf
    cdef long long[::1] toff
    if use_quantiles:
        tf = np.ascontiguousarray(thr_flat, dtype=np.float64)
        toff = np.ascontiguousarray(thr_off, dtype=np.int64)
    else:
        tf = np.empty(0, dtype=np.float64)
        toff = np.zeros(1, dtype=np.int64)

    cdef double best_g = -float("inf")
    cdef bint found = False
    cdef Py_ssize_t best_dim = 0
    cdef double best_thr = 0.0, best_left = 0.0, best_right = 0.0

    cdef Py_ssize_t j, i, q, lo, hi, mid, n_left
    cdef double total, t, sum_left, sum_right, g, acc

    for j in range(d):
        acc = 0.0
        for i in range(n):
            xs[i] = X[order[i, j], j]
            acc = acc + r[order[i, j]]
            ps[i] = acc
        total = ps[n - 1]

        if not use_quantiles:
            for i in range(1, n):
                if xs[i] > xs[i - 1]:
                    t = 0.5 * (xs[i - 1] + xs[i])
                    n_left = i
                    sum_left = ps[i - 1]
                    sum_right = total - sum_left
                    g = sum_left * sum_left / <double>n_left + \
                        sum_right * sum_right / <double>(n - n_left)
                    if g > best_g:
                        best_g = g
                        found = True
                        best_dim = j
                        best_thr = t
                        best_left = sum_left / <double>n_left
                        best_right = sum_right / <double>(n - n_left)
        else:
            for q in range(toff[j], toff[j + 1]):
                t = tf[q]
                # lower bound: count of values < t
                lo = 0
                hi = n
                while lo < hi:
                    mid = (lo + hi) // 2
                    if xs[mid] < t:
                        lo = mid + 1
                    else:
                        hi = mid
                n_left = lo
                if n_left == 0 or n_left == n:
                    continue
                sum_left = ps[n_left - 1]
                sum_right = total - sum_left
                g = sum_left * sum_left / <double>n_left + \
                    sum_right * sum_right / <double>(n - n_left)
                if g > best_g:
                    best_g = g
                    found = True
                    best_dim = j
                    best_thr = t
                    best_left = sum_left / <double>n_left
                    best_right = sum_right / <double>(n - n_left)

    return bool(found), int(best_dim), float(best_thr), float(best_left), float(best_right)
