"""Per-frame superpixel decomposition and statistics.

Frames are segmented independently with SLIC (grid-seeded local k-means in
(L,a,b,x,y) space, connectivity enforced afterwards). Each superpixel gets
a centroid, a regularized Lab color covariance and an average gradient
orientation; gaze points are mapped to the superpixels containing them.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from . import seqdata
from .kernels import slic_iterate

COV_LAMBDA = 1e-3
SLIC_ITERS = 10

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class SuperpixelStats:
    """Summary of one superpixel's member pixels."""

    centroid: tuple[float, float]  # (x, y) in pixels
    mean_lab: np.ndarray  # (3,)
    cov_lab: np.ndarray  # (3,3), regularized with COV_LAMBDA * I
    theta: float  # gradient orientation in [0, pi)
    pixel_count: int


@dataclass(frozen=True)
class SuperpixelFrame:
    """Label map plus one SuperpixelStats per contiguous id."""

    labels: np.ndarray  # (H,W) int32, ids 0..n-1
    stats: tuple[SuperpixelStats, ...]

    @property
    def n(self) -> int:
        return len(self.stats)


@dataclass(frozen=True)
class PositiveSet:
    """Superpixels containing a gaze point, as (frame_index, id) pairs."""

    members: frozenset[tuple[int, int]]

    def ids_for_frame(self, frame: int) -> set[int]:
        return {i for (t, i) in self.members if t == frame}

    def union(self, other: "PositiveSet") -> "PositiveSet":
        return PositiveSet(self.members | other.members)

    def __len__(self) -> int:
        return len(self.members)


def _seed_centers(lab: np.ndarray, step: int) -> np.ndarray:
    """Grid seeds at spacing ``step``, perturbed to the lowest-gradient
    pixel in each seed's 3x3 neighborhood (strict improvement only)."""
    H, W = lab.shape[:2]
    nx = max(1, W // step)
    ny = max(1, H // step)
    off_x = (W - nx * step) / 2.0 + step / 2.0
    off_y = (H - ny * step) / 2.0 + step / 2.0

    # Squared gradient energy; borders get +inf so seeds never move there.
    grad = np.full((H, W), np.inf)
    if H > 2 and W > 2:
        dx = lab[1:-1, 2:, :] - lab[1:-1, :-2, :]
        dy = lab[2:, 1:-1, :] - lab[:-2, 1:-1, :]
        grad[1:-1, 1:-1] = (dx * dx).sum(axis=2) + (dy * dy).sum(axis=2)

    centers = np.empty((nx * ny, 5), dtype=np.float64)
    k = 0
    for gy in range(ny):
        for gx in range(nx):
            sx = min(W - 1, max(0, int(round(off_x + gx * step))))
            sy = min(H - 1, max(0, int(round(off_y + gy * step))))
            best = grad[sy, sx]
            bx, by = sx, sy
            for py in range(max(0, sy - 1), min(H, sy + 2)):
                for px in range(max(0, sx - 1), min(W, sx + 2)):
                    if grad[py, px] < best:
                        best = grad[py, px]
                        bx, by = px, py
            centers[k, 0:3] = lab[by, bx]
            centers[k, 3] = bx
            centers[k, 4] = by
            k += 1
    return centers


def _enforce_connectivity(labels: np.ndarray) -> np.ndarray:
    """Merge every non-largest 4-connected component of a label into the
    largest adjacent superpixel, then relabel ids contiguously."""
    labels = labels.copy()
    for k in np.unique(labels):
        mask = labels == k
        comp, ncomp = ndimage.label(mask, structure=_FOUR_CONN)
        if ncomp <= 1:
            continue
        sizes = np.bincount(comp.ravel())[1:]
        keep = int(np.argmax(sizes)) + 1
        for c in range(1, ncomp + 1):
            if c == keep:
                continue
            cmask = comp == c
            ring = ndimage.binary_dilation(cmask, structure=_FOUR_CONN) & ~cmask
            neigh = np.unique(labels[ring])
            counts = np.bincount(labels.ravel())
            target = int(neigh[np.argmax(counts[neigh])])
            labels[cmask] = target

    uniq, new = np.unique(labels, return_inverse=True)
    return new.reshape(labels.shape).astype(np.int32)


def segment_frame(
    image: np.ndarray,
    target_size: int,
    compactness: float = 10.0,
    iters: int = SLIC_ITERS,
) -> SuperpixelFrame:
    """SLIC-segment one Lab frame into superpixels of roughly
    ``target_size`` x ``target_size`` pixels."""
    H, W = image.shape[:2]
    if target_size < 4:
        raise ValueError(f"target_size must be >= 4, got {target_size}")
    if target_size > min(H, W):
        raise ValueError(
            f"target_size {target_size} exceeds image min dimension {min(H, W)}"
        )
    lab = np.ascontiguousarray(image, dtype=np.float64)
    centers = _seed_centers(lab, target_size)
    invm2 = (compactness / target_size) ** 2
    labels = np.asarray(
        slic_iterate(lab, centers, int(target_size), float(invm2), int(iters))
    )
    if (labels < 0).any():
        # Unreachable with grid seeds; backstop for degenerate center drift.
        _, (iy, ix) = ndimage.distance_transform_edt(
            labels < 0, return_indices=True
        )
        labels = labels[iy, ix]
    labels = _enforce_connectivity(labels)
    return SuperpixelFrame(labels=labels, stats=tuple(compute_stats(lab, labels)))


def compute_stats(image: np.ndarray, label_map: np.ndarray) -> list[SuperpixelStats]:
    """Per-superpixel centroid, Lab mean/covariance and gradient orientation.

    The covariance is the sample covariance (n-1 denominator, zero for
    single-pixel superpixels) plus COV_LAMBDA * I. Orientation is the
    double-angle average of per-pixel Sobel luminance gradients, folded to
    [0, pi); superpixels with zero summed structure vector get theta = 0.
    """
    H, W = label_map.shape
    flat = label_map.ravel()
    n_sp = int(flat.max()) + 1
    cnt = np.bincount(flat, minlength=n_sp)

    xs = np.tile(np.arange(W, dtype=np.float64), H)
    ys = np.repeat(np.arange(H, dtype=np.float64), W)
    cx = np.bincount(flat, weights=xs, minlength=n_sp) / cnt
    cy = np.bincount(flat, weights=ys, minlength=n_sp) / cnt

    chans = [np.ascontiguousarray(image[:, :, c], dtype=np.float64) for c in range(3)]
    sums = np.stack([np.bincount(flat, weights=c.ravel(), minlength=n_sp) for c in chans])
    means = sums / cnt  # (3, n_sp)

    # Sample covariance from raw product sums: sum(v_a v_b) - n mu_a mu_b.
    cov = np.zeros((n_sp, 3, 3))
    for a in range(3):
        for b in range(a, 3):
            prod = np.bincount(
                flat, weights=(chans[a] * chans[b]).ravel(), minlength=n_sp
            )
            centered = prod - cnt * means[a] * means[b]
            val = np.where(cnt > 1, centered / np.maximum(cnt - 1, 1), 0.0)
            cov[:, a, b] = val
            cov[:, b, a] = val
    cov += COV_LAMBDA * np.eye(3)

    gx = ndimage.sobel(chans[0], axis=1, mode="reflect")
    gy = ndimage.sobel(chans[0], axis=0, mode="reflect")
    vx = np.bincount(flat, weights=(gx * gx - gy * gy).ravel(), minlength=n_sp)
    vy = np.bincount(flat, weights=(2.0 * gx * gy).ravel(), minlength=n_sp)
    theta = np.where(
        (vx == 0.0) & (vy == 0.0), 0.0, np.mod(0.5 * np.arctan2(vy, vx), np.pi)
    )

    return [
        SuperpixelStats(
            centroid=(float(cx[i]), float(cy[i])),
            mean_lab=means[:, i].copy(),
            cov_lab=cov[i],
            theta=float(theta[i]),
            pixel_count=int(cnt[i]),
        )
        for i in range(n_sp)
    ]


def motion_theta(flow: np.ndarray, label_map: np.ndarray) -> np.ndarray:
    """Per-superpixel mean motion orientation in [0, pi) from a (H,W,2)
    optical-flow field, using the same double-angle averaging as the
    gradient orientation."""
    if flow.shape[:2] != label_map.shape:
        raise ValueError(
            f"flow size {flow.shape[1]}x{flow.shape[0]} does not match "
            f"label map {label_map.shape[1]}x{label_map.shape[0]}"
        )
    flat = label_map.ravel()
    n_sp = int(flat.max()) + 1
    u = flow[:, :, 0].astype(np.float64)
    v = flow[:, :, 1].astype(np.float64)
    vx = np.bincount(flat, weights=(u * u - v * v).ravel(), minlength=n_sp)
    vy = np.bincount(flat, weights=(2.0 * u * v).ravel(), minlength=n_sp)
    return np.where(
        (vx == 0.0) & (vy == 0.0), 0.0, np.mod(0.5 * np.arctan2(vy, vx), np.pi)
    )


def with_thetas(frame: SuperpixelFrame, thetas: np.ndarray) -> SuperpixelFrame:
    """Copy of ``frame`` with every stat's theta replaced (flow mode)."""
    stats = tuple(
        replace(s, theta=float(t)) for s, t in zip(frame.stats, thetas)
    )
    return SuperpixelFrame(labels=frame.labels, stats=stats)


def map_gaze(traces: list, frames: list[SuperpixelFrame]) -> PositiveSet:
    """Union over observers of the superpixels containing each gaze point."""
    members = set()
    for trace in traces:
        for t, x, y in trace.points:
            sp = frames[t].labels[int(y), int(x)]
            members.add((t, int(sp)))
    return PositiveSet(frozenset(members))


def write_label_maps(frames: list[SuperpixelFrame], out_dir) -> None:
    """Debug output: per-frame label map as 16-bit PNG."""
    os.makedirs(out_dir, exist_ok=True)
    for t, sp in enumerate(frames):
        seqdata.write_u16_png(
            sp.labels.astype(np.uint16), os.path.join(out_dir, f"label_{t:04d}.png")
        )


def read_label_maps(label_dir) -> list[np.ndarray]:
    names = sorted(
        f for f in os.listdir(label_dir) if f.startswith("label_") and f.endswith(".png")
    )
    if not names:
        raise ValueError(f"no label_*.png files in {label_dir}")
    return [
        seqdata.read_u16_png(os.path.join(label_dir, f)).astype(np.int32) for f in names
    ]


def write_boundary_overlays(sequence, frames: list[SuperpixelFrame], out_dir) -> None:
    """Debug output: RGB frames with superpixel boundaries drawn in red."""
    from PIL import Image

    os.makedirs(out_dir, exist_ok=True)
    for t, sp in enumerate(frames):
        img = sequence.frames[t].copy()
        lb = sp.labels
        edge = np.zeros(lb.shape, dtype=bool)
        edge[:, :-1] |= lb[:, :-1] != lb[:, 1:]
        edge[:-1, :] |= lb[:-1, :] != lb[1:, :]
        img[edge] = (255, 0, 0)
        Image.fromarray(img).save(os.path.join(out_dir, f"overlay_{t:04d}.png"))
