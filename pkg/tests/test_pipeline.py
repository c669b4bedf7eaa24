import numpy as np
import pytest

from gazeseg import pipeline, synth
from gazeseg.pipeline import (
    Metrics,
    PipelineConfig,
    evaluate,
    load_config,
    run,
    run_modes,
)
from gazeseg.seqdata import ScoreRow, ScoreTable


def mann_whitney_auc(scores, labels):
    """Pairwise-comparison oracle: P(score_pos > score_neg) + 0.5 ties."""
    pos = scores[labels.astype(bool)]
    neg = scores[~labels.astype(bool)]
    greater = 0
    ties = 0
    for p in pos:
        greater += int((p > neg).sum())
        ties += int((p == neg).sum())
    return (greater + 0.5 * ties) / (len(pos) * len(neg))


def _single_frame_inputs(scores_per_pixel, gt):
    """Wrap a per-pixel score image as one-superpixel-per-pixel tables."""
    h, w = scores_per_pixel.shape
    labels = np.arange(h * w, dtype=np.int32).reshape(h, w)
    rows = {
        (0, int(labels[y, x])): ScoreRow(float(scores_per_pixel[y, x]), 0.5, False)
        for y in range(h)
        for x in range(w)
    }
    return ScoreTable(rows), [labels], [gt]


class TestEvaluate:
    def test_perfect_separator(self):
        gt = np.zeros((10, 10), dtype=bool)
        gt[3:7, 3:7] = True
        table, labels, masks = _single_frame_inputs(gt.astype(float), gt)
        m = evaluate(table, labels, masks)
        assert m.auc == 1.0
        assert m.f_score_at_5fpr == 1.0

    def test_constant_scores_auc_half(self):
        gt = np.zeros((8, 8), dtype=bool)
        gt[0:2] = True
        table, labels, masks = _single_frame_inputs(np.ones((8, 8)), gt)
        m = evaluate(table, labels, masks)
        assert m.auc == 0.5
        assert m.roc == [(0.0, 0.0), (1.0, 1.0)]

    def test_matches_mann_whitney_oracle(self):
        rng = np.random.default_rng(0)
        for trial in range(50):
            h = int(rng.integers(3, 20))
            w = int(rng.integers(3, 20))
            scores = rng.choice([0.1, 0.4, 0.7, 2.0, -1.0], size=(h, w))
            gt = rng.uniform(size=(h, w)) < 0.4
            if gt.all() or not gt.any():
                continue
            table, labels, masks = _single_frame_inputs(scores, gt)
            m = evaluate(table, labels, masks)
            ref = mann_whitney_auc(scores.ravel(), gt.ravel())
            assert abs(m.auc - ref) < 1e-12

    def test_roc_is_valid_step_curve(self):
        rng = np.random.default_rng(1)
        scores = rng.normal(size=(12, 12))
        gt = rng.uniform(size=(12, 12)) < 0.5
        table, labels, masks = _single_frame_inputs(scores, gt)
        m = evaluate(table, labels, masks)
        roc = np.array(m.roc)
        assert tuple(roc[0]) == (0.0, 0.0)
        assert tuple(roc[-1]) == (1.0, 1.0)
        assert (np.diff(roc[:, 0]) >= 0).all()
        assert (np.diff(roc[:, 1]) >= 0).all()

    def test_threshold_respects_fpr_budget(self):
        rng = np.random.default_rng(2)
        scores = rng.normal(size=(30, 30))
        gt = rng.uniform(size=(30, 30)) < 0.3
        table, labels, masks = _single_frame_inputs(scores, gt)
        m = evaluate(table, labels, masks)
        pred = scores >= m.threshold_used
        fpr = (pred & ~gt).sum() / (~gt).sum()
        assert fpr <= 0.05 + 1e-12

    def test_single_class_gt_rejected(self):
        gt = np.ones((4, 4), dtype=bool)
        table, labels, masks = _single_frame_inputs(np.zeros((4, 4)), gt)
        with pytest.raises(ValueError, match="single class"):
            evaluate(table, labels, masks)

    def test_mask_size_mismatch(self):
        gt = np.zeros((4, 4), dtype=bool)
        gt[0, 0] = True
        table, labels, _ = _single_frame_inputs(np.zeros((4, 4)), gt)
        with pytest.raises(ValueError, match="size"):
            evaluate(table, labels, [np.zeros((3, 3), dtype=bool)])


class TestConfig:
    def test_defaults_match_reference_parameters(self):
        c = PipelineConfig()
        assert (c.alpha, c.sigma_a, c.sigma_d, c.tau) == (0.95, 0.5, 50.0, 50.0)
        assert c.diffusion_iters == 10
        assert c.rounds == 50
        assert c.u_fraction == 0.10
        assert c.sp_size == 15

    def test_validation(self):
        with pytest.raises(ValueError, match="alpha"):
            PipelineConfig(alpha=1.0)
        with pytest.raises(ValueError, match="u_fraction"):
            PipelineConfig(u_fraction=0.0)
        with pytest.raises(ValueError, match="flow_dir"):
            PipelineConfig(theta_source="flow")
        with pytest.raises(ValueError, match="feature_path"):
            PipelineConfig(feature_mode="precomputed")

    def test_file_and_overrides(self, tmp_path):
        p = tmp_path / "cfg.txt"
        p.write_text(
            "# comment\nsp_size = 12\nalpha=0.8\nsquared_affinity = true\nseed=5\n"
        )
        c = load_config(p)
        assert (c.sp_size, c.alpha, c.squared_affinity, c.seed) == (12, 0.8, True, 5)
        c2 = load_config(p, overrides={"seed": 9, "sp_size": None})
        assert c2.seed == 9 and c2.sp_size == 12

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "cfg.txt"
        p.write_text("nope=1\n")
        with pytest.raises(ValueError, match="unknown config key"):
            load_config(p)


@pytest.fixture(scope="module")
def small_bundle():
    spec = synth.SynthSpec(frames=6, width=96, height=96, radius=11, seed=9)
    seq, masks, trace = synth.generate(spec)
    config = PipelineConfig(seed=9, rounds=20)
    prep = pipeline.prepare(config, seq)
    return spec, seq, masks, trace, config, prep


class TestRun:
    def test_smoke_outputs(self, tmp_path, small_bundle):
        spec, seq, masks, trace, config, prep = small_bundle
        res = pipeline.run_prepared(
            prep, config, [trace], gt_masks=masks, out_dir=tmp_path, mode="eel"
        )
        assert (tmp_path / "scores.csv").exists()
        assert (tmp_path / "metrics.json").exists()
        for t in range(seq.frame_count):
            assert (tmp_path / f"prob_{t:04d}.png").exists()
            assert (tmp_path / "labels" / f"label_{t:04d}.png").exists()
        assert res.metrics.auc > 0.8

    def test_epsilon_contract_on_outputs(self, small_bundle):
        _, _, masks, trace, config, prep = small_bundle
        res = pipeline.run_prepared(prep, config, [trace], mode="eel")
        for em in res.epsilon_maps:
            assert em.values.min() >= 1e-4
            assert em.values.max() <= 1.0
            assert (em.values[em.positive_flags] == 1.0).all()

    def test_mean_epsilon_higher_inside_mask(self, small_bundle):
        _, _, masks, trace, config, prep = small_bundle
        res = pipeline.run_prepared(prep, config, [trace], mode="prob")
        inside, outside = [], []
        for t, (sp, em) in enumerate(zip(prep.frames, res.epsilon_maps)):
            pix = em.values[sp.labels]
            inside.append(pix[masks[t]].mean())
            outside.append(pix[~masks[t]].mean())
        assert np.mean(inside) > np.mean(outside)

    def test_duplicated_traces_same_positive_set(self, small_bundle):
        _, _, _, trace, config, prep = small_bundle
        a = pipeline.estimate_for_traces(prep, config, [trace])
        b = pipeline.estimate_for_traces(prep, config, [trace, trace])
        assert a[1].members == b[1].members

    def test_two_traces_union(self, small_bundle):
        spec, _, _, trace, config, prep = small_bundle
        other = synth.generate_observers(spec, 2)[1]
        single = pipeline.estimate_for_traces(prep, config, [trace])[1]
        union = pipeline.estimate_for_traces(prep, config, [trace, other])[1]
        assert len(union) >= len(single)
        assert single.members <= union.members

    def test_empty_positive_set_rejected(self, small_bundle):
        from gazeseg.seqdata import GazeTrace

        _, _, _, _, config, prep = small_bundle
        with pytest.raises(ValueError, match="positive set is empty|no gaze point"):
            pipeline.estimate_for_traces(prep, config, [GazeTrace("o", ())])

    def test_prob_mode_scores_are_epsilon(self, small_bundle):
        _, _, _, trace, config, prep = small_bundle
        res = pipeline.run_prepared(prep, config, [trace], mode="prob")
        assert res.ensemble is None
        for (t, i), row in res.scores.rows.items():
            assert row.score == res.epsilon_maps[t].values[i]
            assert row.score == row.epsilon

    def test_bad_mode_rejected(self, small_bundle):
        _, _, _, trace, config, prep = small_bundle
        with pytest.raises(ValueError, match="mode"):
            pipeline.run_prepared(prep, config, [trace], mode="banana")

    def test_run_modes_returns_all(self, small_bundle):
        spec, seq, masks, trace, config, _ = small_bundle
        out = run_modes(config, seq, [trace], masks)
        assert set(out) == {"eel", "el", "prob"}
        for m in out.values():
            assert isinstance(m, Metrics)
            assert 0.0 <= m.auc <= 1.0

    def test_worker_count_invariant(self, small_bundle, tmp_path):
        spec, seq, masks, trace, config, _ = small_bundle
        import dataclasses

        c1 = dataclasses.replace(config, workers=1)
        c4 = dataclasses.replace(config, workers=4)
        r1 = run(c1, seq, [trace], out_dir=tmp_path / "w1", mode="eel")
        r4 = run(c4, seq, [trace], out_dir=tmp_path / "w4", mode="eel")
        b1 = (tmp_path / "w1" / "scores.csv").read_bytes()
        b4 = (tmp_path / "w4" / "scores.csv").read_bytes()
        assert b1 == b4

    def test_el_mode_trains_on_hardened_labels(self, small_bundle):
        _, _, _, trace, config, prep = small_bundle
        res = pipeline.run_prepared(prep, config, [trace], mode="el")
        assert res.ensemble is not None
        assert res.ensemble.rounds == config.rounds

    def test_positives_outscore_background(self, small_bundle):
        _, _, _, trace, config, prep = small_bundle
        res = pipeline.run_prepared(prep, config, [trace], mode="eel")
        pos = [r.score for r in res.scores.rows.values() if r.is_positive]
        rest = [r.score for r in res.scores.rows.values() if not r.is_positive]
        assert np.mean(pos) > np.mean(rest)


class TestFlowTheta:
    def test_flow_mode_runs(self, tmp_path):
        import dataclasses

        from gazeseg import gazeprop

        spec = synth.SynthSpec(frames=3, width=64, height=64, radius=8, seed=2)
        seq, masks, trace = synth.generate(spec)
        flow_dir = tmp_path / "flow"
        flow_dir.mkdir()
        rng = np.random.default_rng(0)
        for t in range(3):
            gazeprop.write_flow(
                rng.normal(size=(64, 64, 2)).astype(np.float32),
                flow_dir / f"flow_{t:04d}.flo",
            )
        config = PipelineConfig(
            seed=2, rounds=5, sp_size=12, theta_source="flow", flow_dir=str(flow_dir)
        )
        res = run(config, seq, [trace], gt_masks=masks, mode="eel")
        assert res.metrics is not None
