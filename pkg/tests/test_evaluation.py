"""Tests for evaluation reports."""

import json
import logging
from dataclasses import replace

import numpy as np
import pytest

from lungsound.errors import DataError
from lungsound.evaluation import (
    comparison_table,
    evaluate,
    majority_vote,
    report_from_confusion,
    report_from_predictions,
)
from lungsound.model import TrainedModel, build_audio_model
from lungsound.nn import count_cost, softmax
from lungsound.synth import TASK_CLASSES, tone_noise_frames


class TestReports:
    """Test confusion-matrix metrics."""

    def test_three_class_confusion(self):
        report = report_from_confusion([[2, 1, 0], [0, 3, 0], [1, 0, 4]], ["a", "b", "c"])
        np.testing.assert_allclose(report.per_class_sensitivity, [2 / 3, 1.0, 4 / 5])
        assert report.accuracy == pytest.approx(9 / 11)
        assert report.total == 11
        assert report.undefined_classes == ()

    def test_perfect_predictor(self):
        y = np.arange(5).repeat(4)
        report = report_from_predictions(y, y, [str(i) for i in range(5)])
        assert report.accuracy == 1.0
        assert (report.per_class_sensitivity == 1.0).all()

    def test_constant_predictor(self):
        """Test that predicting one class on balanced data scores 1/C."""
        y = np.arange(5).repeat(4)
        report = report_from_predictions(y, np.full_like(y, 2), [str(i) for i in range(5)])
        assert report.accuracy == pytest.approx(0.2)
        assert report.per_class_sensitivity.tolist() == [0.0, 0.0, 1.0, 0.0, 0.0]

    def test_empty_row_flagged(self, caplog):
        with caplog.at_level(logging.WARNING, logger="lungsound"):
            report = report_from_confusion([[2, 0], [0, 0]], ["a", "b"])
        assert np.isnan(report.per_class_sensitivity[1])
        assert report.undefined_classes == ("b",)
        assert "sensitivity undefined" in caplog.text
        assert report.to_dict()["per_class_sensitivity"]["b"] is None

    def test_bad_matrix(self):
        with pytest.raises(DataError):
            report_from_confusion([[1, 2, 3]])
        with pytest.raises(DataError):
            report_from_confusion([[1, -1], [0, 1]])

    def test_random_softmax_outputs(self):
        """Test matrix sums and metric ranges over 1000 random cases."""
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n, c = rng.integers(1, 40), rng.integers(2, 6)
            y_pred = softmax(rng.standard_normal((n, c))).argmax(axis=1)
            y_true = rng.integers(0, c, n)
            report = report_from_predictions(y_true, y_pred, [str(i) for i in range(c)])
            assert report.total == n
            assert report.confusion.sum(axis=1).tolist() == np.bincount(y_true, minlength=c).tolist()
            assert 0.0 <= report.accuracy <= 1.0
            defined = report.per_class_sensitivity[~np.isnan(report.per_class_sensitivity)]
            assert ((defined >= 0) & (defined <= 1)).all()
            assert report.accuracy == pytest.approx(np.mean(y_true == y_pred))

    def test_json(self):
        report = report_from_confusion([[1, 0], [1, 2]], ["Healthy", "COPD"])
        data = json.loads(report.to_json())
        assert data["confusion"] == [[1, 0], [1, 2]]
        assert data["accuracy"] == 0.75
        assert report.confusion_frame().loc["COPD", "Healthy"] == 1


class TestMajorityVote:
    """Test subject-level voting."""

    def test_majority(self):
        assert majority_vote([2, 2, 1], 3) == 2

    def test_tie_goes_to_lowest_index(self):
        assert majority_vote([3, 1, 3, 1], 5) == 1


class TestEvaluate:
    """Test evaluation of a model on frames."""

    def test_frame_and_subject_reports(self, tiny_config):
        cfg = replace(tiny_config, classes=TASK_CLASSES)
        model = TrainedModel(build_audio_model(cfg).initialize(0), TASK_CLASSES, cfg)
        _, frames = tone_noise_frames(0, 10, sample_rate_hz=200, window_s=5.0)
        report = evaluate(model, frames)
        assert report.total == 10
        assert report.subject is not None
        assert report.subject.level == "subject"
        assert report.subject.total == 10
        assert "subject" in report.to_dict()

    def test_no_frames(self, tiny_config):
        model = TrainedModel(build_audio_model(tiny_config).initialize(0), tiny_config.classes)
        with pytest.raises(DataError):
            evaluate(model, [])

    def test_comparison_table(self, tiny_config):
        report = report_from_confusion(np.diag([1, 1, 1, 0, 2]), tiny_config.classes)
        cost = count_cost(build_audio_model(tiny_config))
        table = comparison_table([("tiny", report, cost), ("other", report, None)])
        assert table.columns.tolist() == [
            "Model", "#params", "FLOPs", *tiny_config.classes, "Accuracy"
        ]
        assert table.loc[0, "#params"] == cost.total_params
        assert table.loc[0, "URTI"] == 100.0
        assert table.loc[0, "Bronchiectasis"] is None or np.isnan(table.loc[0, "Bronchiectasis"])
        assert table.loc[0, "Accuracy"] == 100.0
