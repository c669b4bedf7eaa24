"""Pure NumPy twin of the compiled SLIC assignment/update kernel.

Arithmetic is arranged to match the C loop exactly (same association order,
same traversal order) so both backends produce bit-identical label maps.
"""

from __future__ import annotations

import numpy as np


def slic_iterate(
    lab: np.ndarray,
    centers: np.ndarray,
    step: int,
    invm2: float,
    iters: int,
) -> np.ndarray:
    """Run the SLIC assignment/update loop.

    lab: (H,W,3) float64 Lab image; centers: (K,5) float64 rows of
    (L,a,b,x,y); step: search half-window (the seed grid spacing); invm2:
    squared spatial weight (compactness/step)**2. Returns the (H,W) int32
    label map after ``iters`` rounds. Ties go to the lowest cluster index.
    """
    H, W = lab.shape[:2]
    K = centers.shape[0]
    L = np.ascontiguousarray(lab[:, :, 0])
    A = np.ascontiguousarray(lab[:, :, 1])
    B = np.ascontiguousarray(lab[:, :, 2])
    xs = np.arange(W, dtype=np.float64)
    ys = np.arange(H, dtype=np.float64)
    xw = np.tile(xs, H)
    yw = np.repeat(ys, W)
    centers = np.array(centers, dtype=np.float64)
    labels = np.full((H, W), -1, dtype=np.int32)
    dist = np.empty((H, W), dtype=np.float64)

    for _ in range(iters):
        dist.fill(np.inf)
        for k in range(K):
            cl, ca, cb, cx, cy = centers[k]
            x0 = max(int(cx) - step, 0)
            x1 = min(int(cx) + step + 1, W)
            y0 = max(int(cy) - step, 0)
            y1 = min(int(cy) + step + 1, H)
            if x0 >= x1 or y0 >= y1:
                continue
            dl = L[y0:y1, x0:x1] - cl
            da = A[y0:y1, x0:x1] - ca
            db = B[y0:y1, x0:x1] - cb
            d = dl * dl
            d += da * da
            d += db * db
            dx = xs[x0:x1] - cx
            dy = ys[y0:y1] - cy
            sp = (dx * dx)[None, :] + (dy * dy)[:, None]
            sp *= invm2
            d += sp
            window = dist[y0:y1, x0:x1]
            better = d < window
            window[better] = d[better]
            labels[y0:y1, x0:x1][better] = k

        flat = labels.ravel()
        valid = flat >= 0
        fv = flat[valid]
        cnt = np.bincount(fv, minlength=K).astype(np.float64)
        sl = np.bincount(fv, weights=L.ravel()[valid], minlength=K)
        sa = np.bincount(fv, weights=A.ravel()[valid], minlength=K)
        sb = np.bincount(fv, weights=B.ravel()[valid], minlength=K)
        sx = np.bincount(fv, weights=xw[valid], minlength=K)
        sy = np.bincount(fv, weights=yw[valid], minlength=K)
        nz = cnt > 0
        centers[nz, 0] = sl[nz] / cnt[nz]
        centers[nz, 1] = sa[nz] / cnt[nz]
        centers[nz, 2] = sb[nz] / cnt[nz]
        centers[nz, 3] = sx[nz] / cnt[nz]
        centers[nz, 4] = sy[nz] / cnt[nz]

    return labels
