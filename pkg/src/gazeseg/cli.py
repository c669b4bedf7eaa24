"""Command-line interface.

Subcommands:
  segment    full pipeline: superpixels, propagation, boosting, outputs
  propagate  propagation stage only, writes epsilon maps
  synth      generate a synthetic blob dataset with gaze traces
  eval       metrics from a scores CSV, label maps and ground-truth masks
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import pipeline, superpixels, synth
from .seqdata import (
    ScoreRow,
    ScoreTable,
    load_sequence,
    parse_gaze_trace,
    write_u16_png,
)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--sp-size", type=int, default=None, dest="sp_size",
                   help="superpixel target size in pixels (paper ties it to "
                   "1 degree of visual angle; hardware dependent)")
    p.add_argument("--theta-source", choices=["gradient", "flow"], default=None,
                   dest="theta_source")
    p.add_argument("--flow-dir", default=None, dest="flow_dir")
    p.add_argument("--squared-affinity", action="store_const", const=True,
                   default=None, dest="squared_affinity",
                   help="use squared distances in the affinity exponents")
    p.add_argument("--u-fraction", type=float, default=None, dest="u_fraction")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--features", default=None, dest="feature_path",
                   help="precomputed feature table (switches feature mode)")


def _config_from_args(args) -> pipeline.PipelineConfig:
    keys = ("seed", "workers", "sp_size", "theta_source", "flow_dir",
            "squared_affinity", "u_fraction", "rounds", "feature_path")
    overrides = {k: getattr(args, k, None) for k in keys}
    if overrides.get("feature_path"):
        overrides["feature_mode"] = "precomputed"
    return pipeline.load_config(args.config, overrides)


def _load_masks(gt_dir) -> list[np.ndarray]:
    return synth.read_masks(gt_dir)


def cmd_segment(args) -> int:
    config = _config_from_args(args)
    sequence = load_sequence(args.manifest)
    traces = [parse_gaze_trace(g, sequence) for g in args.gaze]
    gt = _load_masks(args.gt) if args.gt else None
    result = pipeline.run(
        config, sequence, traces, gt_masks=gt, out_dir=args.out, mode=args.mode
    )
    if result.ensemble is not None:
        result.ensemble.save(os.path.join(args.out, "model.json"))
    if args.debug_overlays:
        superpixels.write_boundary_overlays(
            sequence, result.frames, os.path.join(args.out, "overlays")
        )
    print(f"wrote {sequence.frame_count} probability maps to {args.out}")
    if result.metrics is not None:
        print(
            f"auc={result.metrics.auc:.4f} "
            f"f@5%fpr={result.metrics.f_score_at_5fpr:.4f}"
        )
    return 0


def cmd_propagate(args) -> int:
    config = _config_from_args(args)
    sequence = load_sequence(args.manifest)
    traces = [parse_gaze_trace(g, sequence) for g in args.gaze]
    prep = pipeline.prepare(config, sequence)
    eps_maps, positive = pipeline.estimate_for_traces(prep, config, traces)

    os.makedirs(args.out, exist_ok=True)
    rows = {}
    for t, (sp, em) in enumerate(zip(prep.frames, eps_maps)):
        write_u16_png(
            np.rint(em.values * 65535).astype(np.uint16)[sp.labels],
            os.path.join(args.out, f"eps_{t:04d}.png"),
        )
        for i in range(sp.n):
            rows[(t, i)] = ScoreRow(
                score=float(em.values[i]),
                epsilon=float(em.values[i]),
                is_positive=(t, i) in positive.members,
            )
    ScoreTable(rows).to_csv(os.path.join(args.out, "epsilon.csv"))
    superpixels.write_label_maps(prep.frames, os.path.join(args.out, "labels"))
    print(f"wrote {len(eps_maps)} epsilon maps to {args.out}")
    return 0


def cmd_synth(args) -> int:
    try:
        w, h = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        raise SystemExit(f"--size must look like 128x128, got {args.size}")
    spec = synth.SynthSpec(
        frames=args.frames,
        width=w,
        height=h,
        radius=args.radius,
        noise_sigma=args.noise,
        jitter_sigma=args.jitter,
        seed=args.seed,
        trajectory=args.trajectory,
        noncompliant_p=args.noncompliant,
    )
    synth.write_dataset(spec, args.out, observers=args.observers)
    print(f"wrote {args.frames} frames, masks and {args.observers} gaze "
          f"trace(s) to {args.out}")
    return 0


def cmd_eval(args) -> int:
    table = ScoreTable.from_csv(args.scores)
    labels = superpixels.read_label_maps(args.labels)
    gt = _load_masks(args.gt)
    metrics = pipeline.evaluate(table, labels, gt)
    payload = metrics.to_dict()
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"auc={metrics.auc:.4f} f@5%fpr={metrics.f_score_at_5fpr:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gazeseg",
        description="Gaze-seeded object segmentation for image sequences",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="run the full pipeline")
    p.add_argument("--manifest", required=True)
    p.add_argument("--gaze", action="append", required=True,
                   help="gaze CSV; repeat for multiple observers")
    p.add_argument("--gt", help="directory of binary ground-truth masks")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=list(pipeline.MODES), default="eel")
    p.add_argument("--debug-overlays", action="store_true", dest="debug_overlays",
                   help="also write superpixel boundary overlays")
    _add_config_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("propagate", help="probability propagation only")
    p.add_argument("--manifest", required=True)
    p.add_argument("--gaze", action="append", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--size", default="128x128")
    p.add_argument("--radius", type=float, default=12.0)
    p.add_argument("--observers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jitter", type=float, default=2.0)
    p.add_argument("--noise", type=float, default=8.0)
    p.add_argument("--trajectory", choices=["sine", "linear", "circle"],
                   default="sine")
    p.add_argument("--noncompliant", type=float, default=0.0,
                   help="probability of an off-target fixation per frame")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="metrics from written outputs")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True, help="directory of label_*.png")
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True, help="metrics JSON path")
    p.set_defaults(func=cmd_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
