"""Pure NumPy twin of the compiled regression-stump scan kernel.

Prefix sums run over caller-provided per-column sort orders, so the float
arithmetic sequence (and therefore the result bits) matches the C twin.
"""

from __future__ import annotations

import numpy as np


def stump_scan(
    X: np.ndarray,
    r: np.ndarray,
    order: np.ndarray,
    thr_flat: np.ndarray | None = None,
    thr_off: np.ndarray | None = None,
):
    """Scan all (dimension, threshold) splits for the least-squares stump.

    X: (n,d) float64 features; r: (n,) float64 regression targets; order:
    (n,d) int64 per-column ascending sort indices. With ``thr_flat`` None,
    candidate thresholds are the midpoints between consecutive distinct
    values; otherwise ``thr_flat[thr_off[j]:thr_off[j+1]]`` holds the sorted
    candidate thresholds for column j (split: value < t vs >= t).

    Returns (found, dim, threshold, left_mean, right_mean); ties in the
    squared-error objective keep the lowest dimension, then the lowest
    threshold.
    """
    n, d = X.shape
    best_g = -np.inf
    found = False
    best = (0, 0.0, 0.0, 0.0)

    for j in range(d):
        idx = order[:, j]
        xs = X[idx, j]
        ps = np.cumsum(r[idx])
        total = ps[-1]
        if thr_flat is None:
            m = np.nonzero(xs[1:] > xs[:-1])[0]
            if m.size == 0:
                continue
            thr = 0.5 * (xs[m] + xs[m + 1])
            n_left = m + 1
            sum_left = ps[m]
        else:
            thr = thr_flat[thr_off[j] : thr_off[j + 1]]
            n_left = np.searchsorted(xs, thr, side="left")
            keep = (n_left > 0) & (n_left < n)
            thr = thr[keep]
            n_left = n_left[keep]
            if thr.size == 0:
                continue
            sum_left = ps[n_left - 1]
        n_right = n - n_left
        sum_right = total - sum_left
        g = sum_left * sum_left / n_left
        g += sum_right * sum_right / n_right
        i = int(np.argmax(g))
        if g[i] > best_g:
            best_g = g[i]
            found = True
            best = (
                j,
                float(thr[i]),
                float(sum_left[i] / n_left[i]),
                float(sum_right[i] / n_right[i]),
            )

    return (found,) + best
