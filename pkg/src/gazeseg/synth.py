"""Synthetic moving-blob sequences with ground truth and simulated gaze.

A colored disk travels along a parametric path over a noisy gray
background. Simulated observers fixate the disk center plus Gaussian
jitter, clamped to stay inside the disk (compliant by construction);
an optional non-compliance probability emits off-target fixations.

Random streams are split per purpose: [seed, 0] drives frame noise and
[seed, 1, i] drives observer i, so observer traces are independent of how
many observers are generated.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np
from PIL import Image

from .seqdata import GazeTrace, ImageSequence, write_gaze_csv

BACKGROUND_RGB = (110, 110, 110)
BLOB_RGB = (190, 80, 70)


@dataclass(frozen=True)
class SynthSpec:
    frames: int = 30
    width: int = 128
    height: int = 128
    radius: float = 12.0
    trajectory: str = "sine"  # sine | linear | circle
    noise_sigma: float = 8.0
    jitter_sigma: float = 2.0
    seed: int = 0
    noncompliant_p: float = 0.0

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("need at least one frame")
        if self.radius < 3:
            raise ValueError(f"radius must be >= 3, got {self.radius}")
        if not 0.0 <= self.noncompliant_p <= 1.0:
            raise ValueError("noncompliant_p must be in [0,1]")


def trajectory_points(spec: SynthSpec) -> np.ndarray:
    """Disk centers per frame; raises if the disk would leave the frame."""
    T = spec.frames
    t = np.linspace(0.0, 1.0, T) if T > 1 else np.array([0.5])
    margin = spec.radius + 2.0
    W, H = spec.width, spec.height
    if spec.trajectory == "linear":
        x = margin + t * (W - 1 - 2 * margin)
        y = np.full(T, H / 2.0)
    elif spec.trajectory == "sine":
        x = margin + t * (W - 1 - 2 * margin)
        amp = max(0.0, min(H / 2.0 - margin - 1.0, H / 4.0))
        y = H / 2.0 + amp * np.sin(2.0 * np.pi * 1.5 * t)
    elif spec.trajectory == "circle":
        r = min(W, H) / 2.0 - margin - 1.0
        if r < 0:
            raise ValueError("blob leaves frame: radius too large for circle path")
        ang = 2.0 * np.pi * t
        x = W / 2.0 + r * np.cos(ang)
        y = H / 2.0 + r * np.sin(ang)
    else:
        raise ValueError(f"unknown trajectory {spec.trajectory!r}")

    pts = np.stack([x, y], axis=1)
    if (
        (pts[:, 0] < margin).any()
        or (pts[:, 0] > W - 1 - margin).any()
        or (pts[:, 1] < margin).any()
        or (pts[:, 1] > H - 1 - margin).any()
    ):
        raise ValueError("blob leaves frame along the trajectory")
    return pts


def _disk_mask(spec: SynthSpec, cx: float, cy: float) -> np.ndarray:
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width]
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= spec.radius**2


def _render_frames(spec: SynthSpec) -> tuple[list[np.ndarray], list[np.ndarray]]:
    rng = np.random.default_rng([spec.seed, 0])
    centers = trajectory_points(spec)
    frames, masks = [], []
    bg = np.array(BACKGROUND_RGB, dtype=np.float64)
    fg = np.array(BLOB_RGB, dtype=np.float64)
    for cx, cy in centers:
        mask = _disk_mask(spec, cx, cy)
        img = np.where(mask[:, :, None], fg, bg)
        img += rng.normal(0.0, spec.noise_sigma, (spec.height, spec.width))[:, :, None]
        frames.append(np.clip(np.rint(img), 0, 255).astype(np.uint8))
        masks.append(mask)
    return frames, masks


def _observer_trace(spec: SynthSpec, index: int) -> GazeTrace:
    rng = np.random.default_rng([spec.seed, 1, index])
    centers = trajectory_points(spec)
    reach = max(0.0, spec.radius - 1.5)
    points = []
    for t, (cx, cy) in enumerate(centers):
        off = rng.normal(0.0, spec.jitter_sigma, 2)
        miss = spec.noncompliant_p > 0 and rng.uniform() < spec.noncompliant_p
        if miss:
            # Off-target fixation: uniform point at least one radius away
            # from the disk, clipped inside the image.
            while True:
                gx = rng.uniform(0, spec.width - 1)
                gy = rng.uniform(0, spec.height - 1)
                if (gx - cx) ** 2 + (gy - cy) ** 2 > (2 * spec.radius) ** 2:
                    break
        else:
            norm = float(np.hypot(off[0], off[1]))
            if norm > reach and norm > 0:
                off *= reach / norm
            gx, gy = cx + off[0], cy + off[1]
        points.append((t, float(gx), float(gy)))
    return GazeTrace(observer_id=f"synth{index}", points=tuple(points))


def generate(spec: SynthSpec) -> tuple[ImageSequence, list[np.ndarray], GazeTrace]:
    """Image sequence, per-frame boolean masks, and observer 0's trace."""
    frames, masks = _render_frames(spec)
    return ImageSequence(frames), masks, _observer_trace(spec, 0)


def generate_observers(spec: SynthSpec, k: int) -> list[GazeTrace]:
    """k traces with per-observer jitter streams split from the spec seed."""
    if k < 1:
        raise ValueError(f"need k >= 1 observers, got {k}")
    return [_observer_trace(spec, i) for i in range(k)]


def write_dataset(
    spec: SynthSpec, out_dir, observers: int = 1
) -> tuple[ImageSequence, list[np.ndarray], list[GazeTrace]]:
    """Emit frames + manifest, masks, gaze CSVs and the spec itself."""
    out_dir = os.fspath(out_dir)
    frame_dir = os.path.join(out_dir, "frames")
    mask_dir = os.path.join(out_dir, "masks")
    os.makedirs(frame_dir, exist_ok=True)
    os.makedirs(mask_dir, exist_ok=True)

    seq, masks, _ = generate(spec)
    names = []
    for t, frame in enumerate(seq.frames):
        name = f"frames/frame_{t:04d}.png"
        Image.fromarray(frame).save(os.path.join(out_dir, name))
        names.append(name)
        Image.fromarray(masks[t].astype(np.uint8) * 255).save(
            os.path.join(mask_dir, f"mask_{t:04d}.png")
        )
    with open(os.path.join(out_dir, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write("# synthetic blob sequence\n")
        fh.writelines(n + "\n" for n in names)

    traces = generate_observers(spec, observers)
    for i, trace in enumerate(traces):
        write_gaze_csv(trace, os.path.join(out_dir, f"gaze_obs{i}.csv"))
    with open(os.path.join(out_dir, "spec.json"), "w", encoding="utf-8") as fh:
        json.dump(asdict(spec), fh, indent=2)
        fh.write("\n")
    return seq, masks, traces


def read_masks(mask_dir) -> list[np.ndarray]:
    names = sorted(f for f in os.listdir(mask_dir) if f.endswith(".png"))
    if not names:
        raise ValueError(f"no mask PNGs in {mask_dir}")
    out = []
    for f in names:
        with Image.open(os.path.join(mask_dir, f)) as img:
            out.append(np.asarray(img.convert("L")) > 0)
    return out
