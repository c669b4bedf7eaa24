"""Gradient boosting of regression stumps under an expected exponential loss.

Positive samples contribute exp(-f); unknown samples carry a label
probability eps and contribute the expectation over the Bernoulli(eps)
label, eps * exp(-f) + (1 - eps) * exp(f). At eps = 1 the unknown term
degenerates to the classical exponential loss term exactly, so positives
are stored as eps = 1 and both cases share one formula.

Each boosting round regresses a stump to the negative gradient and adds it
with constant weight 1 (no shrinkage, no line search).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import stump_scan

# Candidate thresholds per dimension when the sample count is too large for
# the exhaustive midpoint scan.
QUANTILE_THRESHOLDS = 33
EXACT_SCAN_LIMIT = 64


@dataclass(frozen=True)
class Sample:
    """One training sample: feature vector plus Positive / Unknown(eps) kind."""

    features: np.ndarray
    epsilon: float  # label probability; exactly 1.0 for Positive samples
    is_positive: bool
    key: tuple[int, int] | None = None  # originating (frame, superpixel_id)


@dataclass
class TrainingSet:
    """Column-oriented view of a sample list."""

    X: np.ndarray  # (n, d) float64
    eps: np.ndarray  # (n,) float64, 1.0 on positives
    positive: np.ndarray  # (n,) bool
    keys: list = field(default_factory=list)

    @classmethod
    def from_samples(cls, samples) -> "TrainingSet":
        X = np.ascontiguousarray(
            np.stack([np.asarray(s.features, dtype=np.float64) for s in samples])
        )
        eps = np.array([s.epsilon for s in samples], dtype=np.float64)
        pos = np.array([s.is_positive for s in samples], dtype=bool)
        return cls(X=X, eps=eps, positive=pos, keys=[s.key for s in samples])

    def __len__(self) -> int:
        return len(self.eps)


def _as_training_set(samples) -> TrainingSet:
    if isinstance(samples, TrainingSet):
        return samples
    return TrainingSet.from_samples(list(samples))


def eel_loss(scores: np.ndarray, samples) -> float:
    """Expected exponential loss of the score vector over the samples."""
    ts = _as_training_set(samples)
    f = np.asarray(scores, dtype=np.float64)
    if f.shape != ts.eps.shape:
        raise ValueError(f"got {f.shape} scores for {len(ts)} samples")
    if not np.isfinite(f).all():
        raise ValueError("non-finite score passed to eel_loss")
    return float(np.sum(ts.eps * np.exp(-f) + (1.0 - ts.eps) * np.exp(f)))


def eel_gradient(scores: np.ndarray, samples) -> np.ndarray:
    """Negative gradient of eel_loss per sample: eps e^-f - (1-eps) e^f."""
    ts = _as_training_set(samples)
    f = np.asarray(scores, dtype=np.float64)
    return ts.eps * np.exp(-f) - (1.0 - ts.eps) * np.exp(f)


@dataclass(frozen=True)
class Stump:
    """Depth-1 regression tree: respond left_value where feature < threshold,
    right_value otherwise."""

    feature_index: int
    threshold: float
    left_value: float
    right_value: float

    def respond(self, X: np.ndarray) -> np.ndarray:
        return np.where(
            X[:, self.feature_index] < self.threshold, self.left_value, self.right_value
        )


def fit_stump(X: np.ndarray, residuals: np.ndarray) -> Stump:
    """Least-squares stump over all (dimension, threshold) candidates.

    For n <= EXACT_SCAN_LIMIT samples, candidate thresholds are all
    midpoints between consecutive distinct values; above that, up to
    QUANTILE_THRESHOLDS quantiles per dimension. Ties keep the lowest
    dimension, then the lowest threshold. Constant features yield an
    equal-leaf stump.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    r = np.ascontiguousarray(residuals, dtype=np.float64)
    n, d = X.shape
    if n < 1:
        raise ValueError("need at least one sample")
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable"), dtype=np.int64)

    if n <= EXACT_SCAN_LIMIT:
        found, dim, thr, left, right = stump_scan(X, r, order)
    else:
        qs = np.linspace(0.0, 1.0, QUANTILE_THRESHOLDS)
        cand = [np.unique(np.quantile(X[:, j], qs)) for j in range(d)]
        thr_flat = np.ascontiguousarray(np.concatenate(cand), dtype=np.float64)
        thr_off = np.zeros(d + 1, dtype=np.int64)
        np.cumsum([len(c) for c in cand], out=thr_off[1:])
        found, dim, thr, left, right = stump_scan(X, r, order, thr_flat, thr_off)

    if not found:
        m = float(np.mean(r))
        return Stump(0, float(X[0, 0]), m, m)
    return Stump(int(dim), float(thr), float(left), float(right))


@dataclass
class Ensemble:
    """Additive stump model f(S) = base_score + sum of stump responses."""

    stumps: list[Stump] = field(default_factory=list)
    round_losses: list[float] = field(default_factory=list)
    base_score: float = 0.0
    dim: int = 0
    seed: int = 0

    @property
    def rounds(self) -> int:
        return len(self.stumps)

    def scores(self, X: np.ndarray) -> np.ndarray:
        f = np.full(len(X), self.base_score)
        for st in self.stumps:
            f = f + st.respond(X)
        return f

    def to_json(self) -> str:
        return json.dumps(
            {
                "dim": self.dim,
                "rounds": self.rounds,
                "seed": self.seed,
                "base_score": self.base_score,
                "stumps": [
                    {
                        "feature_index": s.feature_index,
                        "threshold": s.threshold,
                        "left": s.left_value,
                        "right": s.right_value,
                    }
                    for s in self.stumps
                ],
                "round_losses": self.round_losses,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "Ensemble":
        obj = json.loads(text)
        stumps = [
            Stump(s["feature_index"], s["threshold"], s["left"], s["right"])
            for s in obj["stumps"]
        ]
        return cls(
            stumps=stumps,
            round_losses=list(obj.get("round_losses", [])),
            base_score=float(obj.get("base_score", 0.0)),
            dim=int(obj["dim"]),
            seed=int(obj.get("seed", 0)),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Ensemble":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def train(samples, rounds: int, seed: int = 0) -> Ensemble:
    """Boost stumps against the expected-loss gradient for ``rounds`` rounds.

    The fit itself is deterministic; ``seed`` is carried as metadata so a
    model can be traced back to the training-set split that produced it.
    """
    ts = _as_training_set(samples)
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    if not ts.positive.any():
        raise ValueError("cannot train without positive samples")

    ens = Ensemble(dim=ts.X.shape[1], seed=seed)
    f = np.zeros(len(ts))
    for _ in range(rounds):
        residuals = eel_gradient(f, ts)
        st = fit_stump(ts.X, residuals)
        ens.stumps.append(st)
        f = f + st.respond(ts.X)
        ens.round_losses.append(eel_loss(f, ts))
    return ens


def harden(ts: TrainingSet) -> TrainingSet:
    """Classical-loss variant: unknown labels thresholded at eps = 0.5 and
    made fully confident (exact 0/1, no floor)."""
    eps = np.where(ts.positive, 1.0, np.where(ts.eps >= 0.5, 1.0, 0.0))
    return TrainingSet(X=ts.X, eps=eps, positive=ts.positive, keys=ts.keys)


def assemble_training_set(
    epsilon_maps,
    positive_set,
    feature_table,
    u_fraction: float = 0.10,
    seed: int = 0,
) -> tuple[TrainingSet, list[tuple[int, int]]]:
    """Training split: all of P as Positive, a seeded uniform ``u_fraction``
    of U (without replacement, rounded up) as Unknown(eps). Returns the set
    and the remaining U keys, which are scored by prediction only."""
    if not 0.0 < u_fraction <= 1.0:
        raise ValueError(f"u_fraction must be in (0,1], got {u_fraction}")
    pos_keys = sorted(positive_set.members)
    if not pos_keys:
        raise ValueError("positive set is empty")
    inventory = feature_table.keys_sorted()
    pset = set(pos_keys)
    u_keys = [k for k in inventory if k not in pset]

    n_pick = math.ceil(u_fraction * len(u_keys))
    rng = np.random.default_rng(seed)
    picked_idx = (
        np.sort(rng.choice(len(u_keys), size=n_pick, replace=False))
        if n_pick
        else np.empty(0, dtype=int)
    )
    picked = {u_keys[i] for i in picked_idx}
    heldout = [k for k in u_keys if k not in picked]

    samples = []
    for key in pos_keys:
        samples.append(
            Sample(feature_table.rows[key], epsilon=1.0, is_positive=True, key=key)
        )
    for key in sorted(picked):
        t, i = key
        samples.append(
            Sample(
                feature_table.rows[key],
                epsilon=float(epsilon_maps[t].values[i]),
                is_positive=False,
                key=key,
            )
        )
    return TrainingSet.from_samples(samples), heldout


def predict(ensemble: Ensemble, feature_table, ids) -> np.ndarray:
    """Raw additive scores f(S) for the given (frame, id) keys."""
    X = feature_table.matrix(list(ids))
    return ensemble.scores(X)
