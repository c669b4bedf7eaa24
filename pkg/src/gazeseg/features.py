"""Fixed-length superpixel descriptors for the classifier.

The built-in descriptor characterizes a superpixel and its context with a
small patch pyramid around the centroid: per scale, Lab channel means and
standard deviations plus a magnitude-weighted 8-bin gradient orientation
histogram (14 values per scale, 42 total at the default scales). Externally
computed vectors (e.g. CNN activations) can be supplied instead through a
simple binary table format.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

DEFAULT_SCALES = (16, 32, 64)
ORIENT_BINS = 8

# Precomputed-feature binary layout (little-endian):
#   magic   4 bytes  b"GZFB"
#   dim     u32
#   count   u32
#   count rows of: frame u32, superpixel_id u32, dim * float32
FEATURE_MAGIC = b"GZFB"


@dataclass
class FeatureTable:
    """dim-length vector per (frame_index, superpixel_id)."""

    dim: int
    rows: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def matrix(self, ids) -> np.ndarray:
        out = np.empty((len(ids), self.dim))
        for k, key in enumerate(ids):
            if key not in self.rows:
                raise KeyError(f"no feature row for (frame={key[0]}, id={key[1]})")
            out[k] = self.rows[key]
        return out

    def keys_sorted(self) -> list[tuple[int, int]]:
        return sorted(self.rows)


def _clamped_window(c: int, size: int, limit: int) -> tuple[int, int]:
    lo = c - size // 2
    lo = min(max(lo, 0), max(limit - size, 0))
    return lo, min(limit, lo + size)


def extract_pyramid(
    image: np.ndarray,
    centroid: tuple[float, float],
    scales=DEFAULT_SCALES,
) -> np.ndarray:
    """Descriptor of the patches centered at ``centroid`` (edge-clamped).

    Per scale: Lab mean and std per channel, then an L1-normalized 8-bin
    orientation histogram of Sobel gradients weighted by magnitude
    (uniform 1/8 per bin when the patch has no gradient).
    """
    if list(scales) != sorted(scales):
        raise ValueError(f"scales must be ascending, got {scales}")
    H, W = image.shape[:2]
    cx = int(round(centroid[0]))
    cy = int(round(centroid[1]))
    parts = []
    for s in scales:
        x0, x1 = _clamped_window(cx, s, W)
        y0, y1 = _clamped_window(cy, s, H)
        patch = image[y0:y1, x0:x1]
        flatc = patch.reshape(-1, 3)
        parts.append(flatc.mean(axis=0))
        parts.append(flatc.std(axis=0))

        lum = np.ascontiguousarray(patch[:, :, 0], dtype=np.float64)
        gx = ndimage.sobel(lum, axis=1, mode="reflect")
        gy = ndimage.sobel(lum, axis=0, mode="reflect")
        mag = np.hypot(gx, gy)
        ang = np.mod(np.arctan2(gy, gx), np.pi)
        hist, _ = np.histogram(
            ang.ravel(), bins=ORIENT_BINS, range=(0.0, np.pi), weights=mag.ravel()
        )
        total = hist.sum()
        if total > 1e-12:
            hist = hist / total
        else:
            hist = np.full(ORIENT_BINS, 1.0 / ORIENT_BINS)
        parts.append(hist)
    return np.concatenate(parts)


def extract_table(
    lab_frames: list[np.ndarray],
    frames,
    scales=DEFAULT_SCALES,
    workers: int = 1,
) -> FeatureTable:
    """Descriptor rows for every superpixel of every frame."""
    dim = (6 + ORIENT_BINS) * len(scales)

    def one(t):
        lab = lab_frames[t]
        return {
            (t, i): extract_pyramid(lab, s.centroid, scales)
            for i, s in enumerate(frames[t].stats)
        }

    table = FeatureTable(dim=dim)
    ts = range(len(frames))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for part in ex.map(one, ts):
                table.rows.update(part)
    else:
        for t in ts:
            table.rows.update(one(t))
    return table


def write_precomputed(table: FeatureTable, path) -> None:
    """Serialize a feature table in the binary format described above."""
    keys = table.keys_sorted()
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<II", table.dim, len(keys)))
        for t, i in keys:
            fh.write(struct.pack("<II", t, i))
            fh.write(np.asarray(table.rows[(t, i)], dtype="<f4").tobytes())


def load_precomputed(path, inventory=None) -> FeatureTable:
    """Read a precomputed feature table, optionally validating completeness
    against the sequence's (frame, id) inventory."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FEATURE_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
        dim, count = struct.unpack("<II", fh.read(8))
        if dim == 0:
            raise ValueError(f"{path}: feature dim is 0")
        rows = {}
        rec = struct.Struct("<II")
        for _ in range(count):
            head = fh.read(rec.size)
            if len(head) < rec.size:
                raise ValueError(f"{path}: truncated row header")
            t, i = rec.unpack(head)
            vec = np.frombuffer(fh.read(4 * dim), dtype="<f4")
            if vec.size != dim:
                raise ValueError(f"{path}: truncated row payload for ({t}, {i})")
            if not np.isfinite(vec).all():
                raise ValueError(f"{path}: non-finite feature entry in ({t}, {i})")
            rows[(t, i)] = vec.astype(np.float64)
    table = FeatureTable(dim=int(dim), rows=rows)
    if inventory is not None:
        for key in inventory:
            if key not in rows:
                raise ValueError(
                    f"{path}: missing feature row for (frame={key[0]}, id={key[1]})"
                )
    return table
