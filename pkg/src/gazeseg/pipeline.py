"""End-to-end orchestration and evaluation.

Stages: segment each frame into superpixels, map gaze points to the
positive set, estimate per-superpixel object probabilities, assemble the
positive/unknown training split, boost, then score every superpixel and
write outputs. Three scoring modes share identical splits and seeds:

* ``prob`` — rank by the propagated probabilities alone, no classifier;
* ``el``   — classical exponential loss on labels hardened at 0.5;
* ``eel``  — the full expected-loss method.

Evaluation is pixel-level: superpixel scores are broadcast to member
pixels, the ROC is traced over all pixels of all frames, AUC by trapezoid
rule, and the F-score is taken at the smallest threshold with FPR <= 5%.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import boosting, features, gazeprop, superpixels
from .seqdata import ImageSequence, ScoreRow, ScoreTable, rgb_to_lab, write_outputs

FPR_TARGET = 0.05

MODES = ("eel", "el", "prob")


@dataclass
class PipelineConfig:
    sp_size: int = 15
    compactness: float = 10.0
    alpha: float = 0.95
    sigma_a: float = 0.5
    sigma_d: float = 50.0
    tau: float = 50.0
    diffusion_iters: int = 10
    rounds: int = 50
    u_fraction: float = 0.10
    seed: int = 0
    theta_source: str = "gradient"  # gradient | flow
    feature_mode: str = "pyramid"  # pyramid | precomputed
    feature_path: str | None = None
    flow_dir: str | None = None
    squared_affinity: bool = False
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if not 0.0 < self.u_fraction <= 1.0:
            raise ValueError(f"u_fraction must be in (0,1], got {self.u_fraction}")
        if self.sigma_a <= 0 or self.sigma_d <= 0 or self.tau <= 0:
            raise ValueError("sigma_a, sigma_d and tau must be positive")
        if self.theta_source not in ("gradient", "flow"):
            raise ValueError(
                f"theta_source must be gradient or flow, got {self.theta_source!r}"
            )
        if self.theta_source == "flow" and not self.flow_dir:
            raise ValueError("theta_source=flow requires flow_dir")
        if self.feature_mode not in ("pyramid", "precomputed"):
            raise ValueError("feature_mode must be pyramid or precomputed")
        if self.feature_mode == "precomputed" and not self.feature_path:
            raise ValueError("feature_mode=precomputed requires feature_path")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def propagation_params(self) -> gazeprop.PropagationParams:
        return gazeprop.PropagationParams(
            alpha=self.alpha,
            sigma_a=self.sigma_a,
            sigma_d=self.sigma_d,
            tau=self.tau,
            iters=self.diffusion_iters,
            squared_affinity=self.squared_affinity,
        )


_BOOL_TRUE = ("1", "true", "yes", "on")


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Flat key=value config file; ``#`` comments allowed. ``overrides``
    (e.g. parsed CLI flags) win over file values."""
    values: dict = {}
    if path is not None:
        fields = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, raw = (s.strip() for s in line.split("=", 1))
                if key not in fields:
                    raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
                values[key] = _coerce(key, raw)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values)


def _coerce(key: str, raw: str):
    default = getattr(PipelineConfig, key, None)
    if isinstance(default, bool):
        return raw.lower() in _BOOL_TRUE
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


@dataclass
class Metrics:
    auc: float
    f_score_at_5fpr: float
    roc: list[tuple[float, float]]
    threshold_used: float

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "f_score_at_5fpr": self.f_score_at_5fpr,
            "threshold_used": self.threshold_used,
            "f_score_threshold_rule": f"smallest threshold with FPR <= {FPR_TARGET}",
            "roc": [[float(a), float(b)] for a, b in self.roc],
        }


def _roc_from_pixels(scores: np.ndarray, labels: np.ndarray) -> Metrics:
    pos_total = int(labels.sum())
    neg_total = int(labels.size - pos_total)
    if pos_total == 0 or neg_total == 0:
        raise ValueError("ground truth has a single class; ROC undefined")

    order = np.argsort(-scores, kind="stable")
    ss = scores[order]
    yy = labels[order].astype(np.int64)

    # Cumulative counts at the end of every tie group, i.e. at each distinct
    # threshold (descending).
    last = np.nonzero(np.diff(ss) != 0)[0]
    idx = np.append(last, ss.size - 1)
    tp = np.cumsum(yy)[idx]
    fp = (idx + 1) - tp
    thresholds = ss[idx]

    tp_prev = np.concatenate(([0], tp[:-1]))
    fp_prev = np.concatenate(([0], fp[:-1]))
    # Integer trapezoid sum; equals the Mann-Whitney statistic exactly.
    auc_num = int(np.sum((fp - fp_prev) * (tp + tp_prev)))
    auc = auc_num / (2.0 * neg_total * pos_total)

    fpr = fp / neg_total
    tpr = tp / pos_total
    roc = [(0.0, 0.0)] + list(zip(fpr.tolist(), tpr.tolist()))

    feasible = np.nonzero(fpr <= FPR_TARGET)[0]
    if feasible.size:
        j = int(feasible[-1])  # smallest feasible threshold
        threshold = float(thresholds[j])
        tp_j, fp_j = int(tp[j]), int(fp[j])
    else:
        threshold = float(thresholds[0]) + 1.0  # no prediction at all
        tp_j = fp_j = 0
    precision = tp_j / (tp_j + fp_j) if (tp_j + fp_j) else 0.0
    recall = tp_j / pos_total
    f_score = (
        2.0 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    )
    return Metrics(auc=float(auc), f_score_at_5fpr=float(f_score), roc=roc,
                   threshold_used=threshold)


def evaluate(scores: ScoreTable, label_maps, gt_masks) -> Metrics:
    """Pixel-level ROC metrics for per-superpixel scores.

    ``label_maps`` may be SuperpixelFrame objects or plain (H,W) integer
    label arrays; ``gt_masks`` are binary arrays of the same size.
    """
    if len(label_maps) != len(gt_masks):
        raise ValueError(
            f"{len(label_maps)} label maps vs {len(gt_masks)} ground-truth masks"
        )
    pix_scores, pix_labels = [], []
    for t, lm in enumerate(label_maps):
        labels = lm.labels if isinstance(lm, superpixels.SuperpixelFrame) else lm
        gt = np.asarray(gt_masks[t]).astype(bool)
        if gt.shape != labels.shape:
            raise ValueError(f"frame {t}: mask size {gt.shape} != labels {labels.shape}")
        svec = scores.score_vector(t, int(labels.max()) + 1)
        pix_scores.append(svec[labels].ravel())
        pix_labels.append(gt.ravel())
    return _roc_from_pixels(np.concatenate(pix_scores), np.concatenate(pix_labels))


@dataclass
class Prepared:
    """Gaze-independent artifacts shared by every mode and observer."""

    sequence: ImageSequence
    lab_frames: list[np.ndarray]
    frames: list[superpixels.SuperpixelFrame]
    feature_table: features.FeatureTable
    inventory: list[tuple[int, int]]


def prepare(config: PipelineConfig, sequence: ImageSequence) -> Prepared:
    """Color-convert, segment and featurize all frames."""

    def seg(frame):
        lab = rgb_to_lab(frame)
        return lab, superpixels.segment_frame(lab, config.sp_size, config.compactness)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as ex:
            done = list(ex.map(seg, sequence.frames))
    else:
        done = [seg(f) for f in sequence.frames]
    lab_frames = [d[0] for d in done]
    frames = [d[1] for d in done]

    if config.theta_source == "flow":
        flows = [
            gazeprop.read_flow(os.path.join(config.flow_dir, f"flow_{t:04d}.flo"))
            for t in range(len(frames))
        ]
        frames = [
            superpixels.with_thetas(sp, superpixels.motion_theta(fl, sp.labels))
            for sp, fl in zip(frames, flows)
        ]

    inventory = [(t, i) for t, sp in enumerate(frames) for i in range(sp.n)]
    if config.feature_mode == "precomputed":
        table = features.load_precomputed(config.feature_path, inventory)
    else:
        table = features.extract_table(lab_frames, frames, workers=config.workers)
    return Prepared(
        sequence=sequence,
        lab_frames=lab_frames,
        frames=frames,
        feature_table=table,
        inventory=inventory,
    )


@dataclass
class PipelineResult:
    scores: ScoreTable
    epsilon_maps: list[gazeprop.EpsilonMap]
    positive_set: superpixels.PositiveSet
    frames: list[superpixels.SuperpixelFrame]
    ensemble: boosting.Ensemble | None
    metrics: Metrics | None = None


def estimate_for_traces(prep: Prepared, config: PipelineConfig, traces):
    """Per-observer propagation, then crowd aggregation when needed."""
    params = config.propagation_params()
    psets = [superpixels.map_gaze([tr], prep.frames) for tr in traces]
    union = psets[0]
    for ps in psets[1:]:
        union = union.union(ps)
    if not len(union):
        raise ValueError("no gaze point hit the sequence; positive set is empty")
    per_obs = [
        gazeprop.estimate_epsilon(prep.frames, ps, params, workers=config.workers)
        for ps in psets
    ]
    if len(per_obs) == 1:
        return per_obs[0], union
    return gazeprop.aggregate_observers(per_obs, psets), union


def run_prepared(
    prep: Prepared,
    config: PipelineConfig,
    traces,
    gt_masks=None,
    out_dir=None,
    mode: str = "eel",
) -> PipelineResult:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    eps_maps, positive = estimate_for_traces(prep, config, traces)

    ensemble = None
    if mode == "prob":
        all_scores = np.concatenate([m.values for m in eps_maps])
    else:
        ts, _ = boosting.assemble_training_set(
            eps_maps, positive, prep.feature_table, config.u_fraction, config.seed
        )
        if mode == "el":
            ts = boosting.harden(ts)
        ensemble = boosting.train(ts, rounds=config.rounds, seed=config.seed)
        all_scores = boosting.predict(ensemble, prep.feature_table, prep.inventory)

    rows = {}
    for key, score in zip(prep.inventory, all_scores):
        t, i = key
        rows[key] = ScoreRow(
            score=float(score),
            epsilon=float(eps_maps[t].values[i]),
            is_positive=key in positive.members,
        )
    table = ScoreTable(rows)

    metrics = None
    if gt_masks is not None:
        metrics = evaluate(table, prep.frames, gt_masks)

    if out_dir is not None:
        meta = None
        if metrics is not None:
            meta = dict(metrics.to_dict(), mode=mode, seed=config.seed)
        write_outputs(table, prep.frames, out_dir, metrics=meta)
        superpixels.write_label_maps(prep.frames, os.path.join(out_dir, "labels"))
    return PipelineResult(
        scores=table,
        epsilon_maps=eps_maps,
        positive_set=positive,
        frames=prep.frames,
        ensemble=ensemble,
        metrics=metrics,
    )


def run(
    config: PipelineConfig,
    sequence: ImageSequence,
    traces,
    gt_masks=None,
    out_dir=None,
    mode: str = "eel",
) -> PipelineResult:
    """All four stages on raw inputs; see run_prepared for the scored half."""
    prep = prepare(config, sequence)
    return run_prepared(prep, config, traces, gt_masks, out_dir, mode)


def run_modes(
    config: PipelineConfig,
    sequence: ImageSequence,
    traces,
    gt_masks,
    modes=MODES,
) -> dict[str, Metrics]:
    """Metrics for each scoring mode on identical splits and seeds."""
    prep = prepare(config, sequence)
    out = {}
    for mode in modes:
        res = run_prepared(prep, config, traces, gt_masks, out_dir=None, mode=mode)
        out[mode] = res.metrics
    return out
