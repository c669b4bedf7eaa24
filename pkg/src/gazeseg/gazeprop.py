"""Object-probability estimation for non-gazed superpixels.

A Lab color model is built from every gazed superpixel; each superpixel's
seed probability is the best Mahalanobis kernel match against that model
(normalization constant dropped so values stay in (0, 1]). Probabilities
are then spread over a per-frame affinity graph through the symmetrically
normalized propagation matrix, with gazed entries pinned at 1 after every
step. Several observers' maps can be averaged, with their positive sets
unioned.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular
from scipy.spatial import cKDTree

from .superpixels import PositiveSet, SuperpixelFrame, SuperpixelStats

# Floor/ceiling applied to non-gazed probabilities so the expected loss
# never sees a fully confident unknown label.
EPSILON_FLOOR = 1e-4


@dataclass(frozen=True)
class PropagationParams:
    alpha: float = 0.95
    sigma_a: float = 0.5
    sigma_d: float = 50.0
    tau: float = 50.0
    iters: int = 10
    squared_affinity: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must be in [0,1), got {self.alpha}")
        if self.sigma_a <= 0 or self.sigma_d <= 0 or self.tau <= 0:
            raise ValueError("sigma_a, sigma_d and tau must be positive")
        if self.iters < 0:
            raise ValueError(f"iters must be >= 0, got {self.iters}")


class GazeColorModel:
    """One (mean, covariance) Lab component per gazed superpixel."""

    def __init__(self, mus: np.ndarray, sigmas: np.ndarray):
        if len(mus) == 0:
            raise ValueError("color model needs at least one component")
        self.mus = np.asarray(mus, dtype=np.float64)
        self.sigmas = np.asarray(sigmas, dtype=np.float64)
        self._chol = np.linalg.cholesky(self.sigmas)

    @property
    def components(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(m, s) for m, s in zip(self.mus, self.sigmas)]

    def __len__(self) -> int:
        return len(self.mus)


def build_color_model(
    positive_set: PositiveSet, frames: list[SuperpixelFrame]
) -> GazeColorModel:
    """Collect (mean_lab, cov_lab) of every gazed superpixel, ordered by
    (frame, id)."""
    keys = sorted(positive_set.members)
    if not keys:
        raise ValueError("positive set is empty; need at least one gazed superpixel")
    mus = np.stack([frames[t].stats[i].mean_lab for t, i in keys])
    sigmas = np.stack([frames[t].stats[i].cov_lab for t, i in keys])
    return GazeColorModel(mus, sigmas)


def initial_probabilities(
    frame_stats: list[SuperpixelStats] | tuple,
    model: GazeColorModel,
    gazed_ids=(),
) -> np.ndarray:
    """Seed probabilities: best Mahalanobis kernel over model components,
    exp(-0.5 d^2), with gazed superpixels overridden to 1."""
    X = np.stack([s.mean_lab for s in frame_stats])  # (N,3)
    p = np.zeros(len(frame_stats))
    for mu, chol in zip(model.mus, model._chol):
        diff = (X - mu).T  # (3,N)
        z = solve_triangular(chol, diff, lower=True)
        d2 = np.einsum("ij,ij->j", z, z)
        np.maximum(p, np.exp(-0.5 * d2), out=p)
    gz = list(gazed_ids)
    if gz:
        p[gz] = 1.0
    return p


@dataclass(frozen=True)
class AffinityGraph:
    """Sparse symmetric nonnegative affinity with zero diagonal."""

    n: int
    w: sp.csr_matrix
    degrees: np.ndarray


def build_affinity(
    frame_stats,
    sigma_a: float,
    sigma_d: float,
    tau: float,
    squared: bool = False,
) -> AffinityGraph:
    """Pairwise affinity from orientation and centroid distance.

    w_ij = exp(-|dtheta| / 2 sigma_a^2) * exp(-|dC| / 2 sigma_d^2) for
    centroid distance <= tau, zero otherwise. Distances enter unsquared
    (``squared=True`` switches to the conventional squared form); the angle
    difference is circular on [0, pi).
    """
    if not len(frame_stats):
        raise ValueError("cannot build affinity over zero superpixels")
    n = len(frame_stats)
    cent = np.array([s.centroid for s in frame_stats])
    theta = np.array([s.theta for s in frame_stats])

    tree = cKDTree(cent)
    pairs = tree.query_pairs(r=float(tau), output_type="ndarray")
    if len(pairs):
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        i, j = pairs[:, 0], pairs[:, 1]
        dth = np.abs(theta[i] - theta[j])
        dth = np.minimum(dth, np.pi - dth)
        dc = np.sqrt(((cent[i] - cent[j]) ** 2).sum(axis=1))
        if squared:
            dth = dth * dth
            dc = dc * dc
        w = np.exp(-dth / (2.0 * sigma_a**2)) * np.exp(-dc / (2.0 * sigma_d**2))
        mat = sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(n, n),
        ).tocsr()
    else:
        mat = sp.csr_matrix((n, n))
    degrees = np.asarray(mat.sum(axis=1)).ravel()
    return AffinityGraph(n=n, w=mat, degrees=degrees)


def diffuse(
    graph: AffinityGraph,
    p0: np.ndarray,
    gazed_ids,
    alpha: float,
    iters: int,
) -> np.ndarray:
    """Iterate P <- alpha * Omega P + (1 - alpha) * P0 with
    Omega = D^-1/2 W D^-1/2.

    P0 is first clamped to [0,1] with gazed entries set to 1; after every
    iteration entries are clamped to [0,1] and gazed entries re-pinned to 1.
    Vertices of degree zero get a zero Omega row and settle at
    (1 - alpha) * p0. The [EPSILON_FLOOR, 1 - EPSILON_FLOOR] squeeze is NOT
    applied here; EpsilonMap does that so iters=0 / alpha=0 return P0
    exactly.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    if p0.shape != (graph.n,):
        raise ValueError(f"p0 has length {p0.shape}, graph has {graph.n} vertices")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0,1), got {alpha}")
    gz = np.asarray(sorted(gazed_ids), dtype=np.intp)

    dinv = np.zeros(graph.n)
    nz = graph.degrees > 0
    dinv[nz] = 1.0 / np.sqrt(graph.degrees[nz])
    omega = sp.diags(dinv) @ graph.w @ sp.diags(dinv)

    base = np.clip(p0, 0.0, 1.0)
    base[gz] = 1.0
    p = base.copy()
    for _ in range(iters):
        p = alpha * (omega @ p) + (1.0 - alpha) * base
        np.clip(p, 0.0, 1.0, out=p)
        p[gz] = 1.0
    return p


class EpsilonMap:
    """Final per-superpixel object probabilities for one frame.

    Non-gazed values are squeezed into [EPSILON_FLOOR, 1 - EPSILON_FLOOR];
    gazed entries are exactly 1.
    """

    def __init__(self, values: np.ndarray, positive_flags: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        flags = np.asarray(positive_flags, dtype=bool)
        if values.shape != flags.shape:
            raise ValueError("values and positive_flags must have equal length")
        self.values = np.where(
            flags, 1.0, np.clip(values, EPSILON_FLOOR, 1.0 - EPSILON_FLOOR)
        )
        self.positive_flags = flags

    def __len__(self) -> int:
        return len(self.values)


def propagate_frame(
    frame: SuperpixelFrame,
    model: GazeColorModel,
    gazed_ids,
    params: PropagationParams,
) -> EpsilonMap:
    gz = sorted(gazed_ids)
    p0 = initial_probabilities(frame.stats, model, gz)
    graph = build_affinity(
        frame.stats, params.sigma_a, params.sigma_d, params.tau,
        squared=params.squared_affinity,
    )
    eps = diffuse(graph, p0, gz, params.alpha, params.iters)
    flags = np.zeros(frame.n, dtype=bool)
    flags[gz] = True
    return EpsilonMap(eps, flags)


def estimate_epsilon(
    frames: list[SuperpixelFrame],
    positive_set: PositiveSet,
    params: PropagationParams,
    workers: int = 1,
) -> list[EpsilonMap]:
    """Full single-observer estimate: one global color model, then
    per-frame seeding, affinity and diffusion."""
    model = build_color_model(positive_set, frames)

    def one(t_frame):
        t, frame = t_frame
        return propagate_frame(frame, model, positive_set.ids_for_frame(t), params)

    items = list(enumerate(frames))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(one, items))
    return [one(it) for it in items]


def aggregate_observers(
    maps_per_observer: list[list[EpsilonMap]],
    positive_sets: list[PositiveSet],
) -> list[EpsilonMap]:
    """Average epsilon maps elementwise across observers; the positive set
    becomes the union and those entries are reset to 1."""
    if not maps_per_observer:
        raise ValueError("no observers to aggregate")
    n_frames = len(maps_per_observer[0])
    for maps in maps_per_observer:
        if len(maps) != n_frames:
            raise ValueError("observers cover different frame counts")

    union = positive_sets[0]
    for ps in positive_sets[1:]:
        union = union.union(ps)

    out = []
    for t in range(n_frames):
        sizes = {len(maps[t]) for maps in maps_per_observer}
        if len(sizes) != 1:
            raise ValueError(
                f"frame {t}: observers disagree on superpixel count {sorted(sizes)}"
            )
        mean = np.mean([maps[t].values for maps in maps_per_observer], axis=0)
        flags = np.zeros(len(maps_per_observer[0][t]), dtype=bool)
        flags[sorted(union.ids_for_frame(t))] = True
        out.append(EpsilonMap(mean, flags))
    return out


# --------------------------------------------------------------------------
# Optional optical-flow input (Middlebury .flo payload)
# --------------------------------------------------------------------------

_FLO_MAGIC = 202021.25


def read_flow(path) -> np.ndarray:
    """Read a Middlebury .flo file into a (H,W,2) float32 (dx,dy) array."""
    with open(path, "rb") as fh:
        magic = struct.unpack("<f", fh.read(4))[0]
        if magic != _FLO_MAGIC:
            raise ValueError(f"{path}: bad .flo magic {magic!r}")
        w, h = struct.unpack("<ii", fh.read(8))
        data = np.fromfile(fh, dtype="<f4", count=2 * w * h)
    if data.size != 2 * w * h:
        raise ValueError(f"{path}: truncated flow payload")
    return data.reshape(h, w, 2)


def write_flow(flow: np.ndarray, path) -> None:
    flow = np.asarray(flow, dtype="<f4")
    h, w = flow.shape[:2]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<f", _FLO_MAGIC))
        fh.write(struct.pack("<ii", w, h))
        flow.reshape(-1).tofile(fh)
