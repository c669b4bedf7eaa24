import json

import numpy as np
import pytest

from gazeseg.cli import main
from gazeseg.seqdata import ScoreTable, read_u16_png


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    rc = main(
        [
            "synth",
            "--frames", "5",
            "--size", "96x96",
            "--radius", "11",
            "--observers", "2",
            "--seed", "4",
            "--out", str(root),
        ]
    )
    assert rc == 0
    return root


class TestSynthCommand:
    def test_outputs_exist(self, dataset):
        assert (dataset / "manifest.txt").exists()
        assert (dataset / "gaze_obs0.csv").exists()
        assert (dataset / "gaze_obs1.csv").exists()
        assert (dataset / "masks" / "mask_0000.png").exists()
        assert (dataset / "spec.json").exists()

    def test_bad_size_string(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["synth", "--size", "128", "--out", str(tmp_path)])


class TestSegmentCommand:
    def test_end_to_end_with_metrics(self, dataset, tmp_path):
        out = tmp_path / "out"
        rc = main(
            [
                "segment",
                "--manifest", str(dataset / "manifest.txt"),
                "--gaze", str(dataset / "gaze_obs0.csv"),
                "--gt", str(dataset / "masks"),
                "--out", str(out),
                "--seed", "4",
                "--rounds", "15",
            ]
        )
        assert rc == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert 0.5 < metrics["auc"] <= 1.0
        assert metrics["mode"] == "eel"
        table = ScoreTable.from_csv(out / "scores.csv")
        assert len(table.rows) > 0

    def test_two_observers(self, dataset, tmp_path):
        out = tmp_path / "out2"
        rc = main(
            [
                "segment",
                "--manifest", str(dataset / "manifest.txt"),
                "--gaze", str(dataset / "gaze_obs0.csv"),
                "--gaze", str(dataset / "gaze_obs1.csv"),
                "--out", str(out),
                "--seed", "4",
                "--rounds", "10",
            ]
        )
        assert rc == 0

    def test_model_and_debug_overlays(self, dataset, tmp_path):
        from gazeseg.boosting import Ensemble

        out = tmp_path / "out3"
        rc = main(
            [
                "segment",
                "--manifest", str(dataset / "manifest.txt"),
                "--gaze", str(dataset / "gaze_obs0.csv"),
                "--out", str(out),
                "--seed", "4",
                "--rounds", "5",
                "--debug-overlays",
            ]
        )
        assert rc == 0
        model = Ensemble.load(out / "model.json")
        assert model.rounds == 5
        assert (out / "overlays" / "overlay_0000.png").exists()

    def test_error_reported_not_raised(self, dataset, tmp_path, capsys):
        rc = main(
            [
                "segment",
                "--manifest", str(dataset / "manifest.txt"),
                "--gaze", str(dataset / "does_not_exist.csv"),
                "--out", str(tmp_path / "x"),
            ]
        )
        assert rc == 2 or rc != 0


class TestPropagateCommand:
    def test_epsilon_outputs(self, dataset, tmp_path):
        out = tmp_path / "eps"
        rc = main(
            [
                "propagate",
                "--manifest", str(dataset / "manifest.txt"),
                "--gaze", str(dataset / "gaze_obs0.csv"),
                "--out", str(out),
            ]
        )
        assert rc == 0
        img = read_u16_png(out / "eps_0000.png")
        assert img.max() <= 65535
        table = ScoreTable.from_csv(out / "epsilon.csv")
        vals = np.array([r.epsilon for r in table.rows.values()])
        assert vals.min() >= 1e-4 and vals.max() <= 1.0


class TestEvalCommand:
    def test_recomputes_metrics_from_files(self, dataset, tmp_path):
        out = tmp_path / "seg"
        main(
            [
                "segment",
                "--manifest", str(dataset / "manifest.txt"),
                "--gaze", str(dataset / "gaze_obs0.csv"),
                "--gt", str(dataset / "masks"),
                "--out", str(out),
                "--seed", "4",
                "--rounds", "10",
            ]
        )
        direct = json.loads((out / "metrics.json").read_text())
        metrics_path = tmp_path / "metrics.json"
        rc = main(
            [
                "eval",
                "--scores", str(out / "scores.csv"),
                "--labels", str(out / "labels"),
                "--gt", str(dataset / "masks"),
                "--out", str(metrics_path),
            ]
        )
        assert rc == 0
        recomputed = json.loads(metrics_path.read_text())
        assert recomputed["auc"] == pytest.approx(direct["auc"], abs=1e-12)
        assert recomputed["f_score_at_5fpr"] == pytest.approx(
            direct["f_score_at_5fpr"], abs=1e-12
        )
