"""Sequence and gaze ingestion, color conversion, and output files.

File formats handled here:

* manifest: plain text, one image path per line, ``#`` comments allowed,
  relative paths resolved against the manifest's directory;
* gaze CSV: header ``frame,x,y`` with an optional fourth ``observer``
  column, one fixation per row;
* probability maps: 16-bit single-channel PNG, value = round(sigma(2*f) * 65535);
* score table CSV: ``frame,superpixel_id,score,epsilon,is_positive``.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.special import expit

log = logging.getLogger(__name__)

PNG_MAX = 65535


@dataclass(frozen=True)
class ImageSequence:
    """Ordered RGB frames sharing one width and height."""

    frames: list[np.ndarray]

    def __post_init__(self):
        if not self.frames:
            raise ValueError("image sequence must contain at least one frame")
        h, w = self.frames[0].shape[:2]
        for i, f in enumerate(self.frames):
            if f.shape[:2] != (h, w):
                raise ValueError(
                    f"frame {i} has size {f.shape[1]}x{f.shape[0]}, expected {w}x{h}"
                )

    @property
    def height(self) -> int:
        return self.frames[0].shape[0]

    @property
    def width(self) -> int:
        return self.frames[0].shape[1]

    @property
    def frame_count(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class GazeTrace:
    """Per-observer fixation samples: one (frame, x, y) per viewed frame."""

    observer_id: str
    points: tuple[tuple[int, float, float], ...]
    dropped: int = 0

    def by_frame(self) -> dict[int, tuple[float, float]]:
        return {t: (x, y) for t, x, y in self.points}


def load_sequence(manifest_path: str | os.PathLike) -> ImageSequence:
    """Decode the images listed in a manifest into an 8-bit RGB sequence."""
    manifest_path = os.fspath(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    paths = []
    with open(manifest_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            paths.append(line if os.path.isabs(line) else os.path.join(base, line))
    if not paths:
        raise ValueError(f"manifest {manifest_path} lists no images")

    frames = []
    for p in paths:
        if not os.path.exists(p):
            raise FileNotFoundError(f"manifest entry does not exist: {p}")
        try:
            with Image.open(p) as img:
                frames.append(np.asarray(img.convert("RGB"), dtype=np.uint8))
        except UnidentifiedImageError as exc:
            raise ValueError(f"cannot decode image: {p}") from exc
    h, w = frames[0].shape[:2]
    for p, f in zip(paths, frames):
        if f.shape[:2] != (h, w):
            raise ValueError(
                f"size mismatch in {p}: {f.shape[1]}x{f.shape[0]} != {w}x{h}"
            )
    return ImageSequence(frames)


def _parse_header(row: list[str]) -> bool:
    cols = [c.strip().lower() for c in row]
    if cols[:3] != ["frame", "x", "y"] or len(cols) > 4:
        raise ValueError(f"gaze CSV header must be frame,x,y[,observer], got {row}")
    if len(cols) == 4 and cols[3] != "observer":
        raise ValueError(f"gaze CSV header must be frame,x,y[,observer], got {row}")
    return len(cols) == 4


def _read_gaze_rows(csv_path: str):
    """Yield (lineno, frame, x, y, observer|None) from a gaze CSV."""
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"gaze CSV {csv_path} is empty (missing header)")
        has_observer = _parse_header(header)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 3 + has_observer:
                raise ValueError(f"{csv_path}:{lineno}: expected "
                                 f"{3 + has_observer} columns, got {len(row)}")
            try:
                t = int(row[0])
                x = float(row[1])
                y = float(row[2])
            except ValueError:
                raise ValueError(f"{csv_path}:{lineno}: non-numeric gaze row {row!r}")
            obs = row[3].strip() if has_observer else None
            yield lineno, t, x, y, obs


def _build_trace(csv_path, rows, sequence, observer_id):
    points: dict[int, tuple[float, float]] = {}
    dropped = 0
    for lineno, t, x, y, _ in rows:
        if not (0 <= t < sequence.frame_count):
            dropped += 1
            continue
        if not (0 <= x < sequence.width and 0 <= y < sequence.height):
            dropped += 1
            continue
        if t in points:
            log.warning("%s:%d: duplicate frame %d, keeping earliest",
                        csv_path, lineno, t)
            dropped += 1
            continue
        points[t] = (x, y)
    if dropped:
        log.warning("%s: dropped %d gaze row(s)", csv_path, dropped)
    pts = tuple((t,) + points[t] for t in sorted(points))
    return GazeTrace(observer_id=observer_id, points=pts, dropped=dropped)


def parse_gaze_trace(
    csv_path: str | os.PathLike,
    sequence: ImageSequence,
    observer_id: str | None = None,
) -> GazeTrace:
    """Read one observer's gaze CSV, dropping out-of-bounds rows.

    Rows whose coordinates fall outside the image or whose frame index falls
    outside [0, T] are dropped (not clamped); duplicated frame indices keep
    the earliest row. The number of dropped rows is reported on the returned
    trace and logged.
    """
    csv_path = os.fspath(csv_path)
    rows = list(_read_gaze_rows(csv_path))
    seen = sorted({r[4] for r in rows if r[4] is not None})
    if len(seen) > 1:
        raise ValueError(
            f"{csv_path} mixes observers {seen}; "
            "one file per observer (or use parse_gaze_traces)"
        )
    if observer_id is None:
        if seen:
            observer_id = seen[0]
        else:
            observer_id = os.path.splitext(os.path.basename(csv_path))[0]
    return _build_trace(csv_path, rows, sequence, observer_id)


def parse_gaze_traces(csv_path, sequence) -> list[GazeTrace]:
    """Split a multi-observer gaze CSV into one trace per observer id."""
    csv_path = os.fspath(csv_path)
    rows = list(_read_gaze_rows(csv_path))
    seen = sorted({r[4] for r in rows if r[4] is not None})
    if not seen:
        return [parse_gaze_trace(csv_path, sequence)]
    return [
        _build_trace(csv_path, [r for r in rows if r[4] == obs], sequence, obs)
        for obs in seen
    ]


def write_gaze_csv(trace: GazeTrace, path: str | os.PathLike) -> None:
    """Write a trace in the canonical gaze CSV format (round-trip safe)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "x", "y", "observer"])
        for t, x, y in trace.points:
            w.writerow([t, repr(float(x)), repr(float(y)), trace.observer_id])


# --------------------------------------------------------------------------
# sRGB (D65) -> CIELAB
# --------------------------------------------------------------------------

_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
# D65 reference white in XYZ, Y normalized to 1.
_WHITE = np.array([0.95047, 1.0, 1.08883])


def rgb_to_lab(image: np.ndarray) -> np.ndarray:
    """Convert an 8-bit sRGB image (H,W,3) to CIELAB (float64).

    Standard sRGB linearization, D65 white point. L in [0,100]; the gray
    axis maps to a = b = 0.
    """
    if image.dtype != np.uint8:
        raise ValueError(f"expected uint8 sRGB input, got {image.dtype}")
    c = image.astype(np.float64) / 255.0
    lin = np.where(c > 0.04045, ((c + 0.055) / 1.055) ** 2.4, c / 12.92)
    xyz = lin @ _RGB_TO_XYZ.T
    r = xyz / _WHITE
    eps = (6.0 / 29.0) ** 3
    f = np.where(r > eps, np.cbrt(r), r / (3 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


# --------------------------------------------------------------------------
# Pipeline outputs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreRow:
    score: float
    epsilon: float
    is_positive: bool


@dataclass
class ScoreTable:
    """One row per superpixel: classifier score, epsilon and P membership."""

    rows: dict[tuple[int, int], ScoreRow] = field(default_factory=dict)

    def score_vector(self, frame: int, n: int) -> np.ndarray:
        out = np.empty(n)
        for i in range(n):
            key = (frame, i)
            if key not in self.rows:
                raise ValueError(f"score table missing superpixel (frame={frame}, id={i})")
            out[i] = self.rows[key].score
        return out

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["frame", "superpixel_id", "score", "epsilon", "is_positive"])
            for (t, i) in sorted(self.rows):
                r = self.rows[(t, i)]
                w.writerow([t, i, repr(float(r.score)), repr(float(r.epsilon)),
                            int(r.is_positive)])

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> "ScoreTable":
        rows = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            expected = ["frame", "superpixel_id", "score", "epsilon", "is_positive"]
            if [c.strip() for c in header] != expected:
                raise ValueError(f"bad score CSV header {header}")
            for row in reader:
                if not row:
                    continue
                rows[(int(row[0]), int(row[1]))] = ScoreRow(
                    float(row[2]), float(row[3]), bool(int(row[4]))
                )
        return cls(rows)


def write_u16_png(values: np.ndarray, path: str | os.PathLike) -> None:
    """Write a (H,W) array of uint16 values as a 16-bit grayscale PNG."""
    arr = np.ascontiguousarray(values, dtype=np.uint16)
    Image.fromarray(arr).save(path, format="PNG")


def read_u16_png(path: str | os.PathLike) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img, dtype=np.uint16)


def probability_png_values(scores: np.ndarray) -> np.ndarray:
    """Map raw boosting scores f to 16-bit PNG values via sigma(2f)."""
    return np.rint(expit(2.0 * np.asarray(scores, dtype=np.float64)) * PNG_MAX).astype(
        np.uint16
    )


def write_outputs(
    scores: ScoreTable,
    maps: list,
    out_dir: str | os.PathLike,
    metrics: dict | None = None,
) -> None:
    """Write per-frame probability PNGs, the score CSV and optional metrics.

    ``maps`` is the list of per-frame SuperpixelFrame objects; every
    superpixel in them must have a row in ``scores``.
    """
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    for t, sp in enumerate(maps):
        f = scores.score_vector(t, sp.n)
        pix = probability_png_values(f)[sp.labels]
        write_u16_png(pix, os.path.join(out_dir, f"prob_{t:04d}.png"))
    scores.to_csv(os.path.join(out_dir, "scores.csv"))
    if metrics is not None:
        with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8") as fh:
            json.dump(metrics, fh, indent=2, sort_keys=True)
            fh.write("\n")
