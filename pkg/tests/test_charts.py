"""Tests for chart generation."""

import pandas as pd
import pytest

from lungsound import charts
from lungsound.charts import chart_age_groups, chart_dataset, chart_loss
from lungsound.ingest import compute_stats, load_manifest


@pytest.fixture
def stats(database):
    return compute_stats(load_manifest(database.train_manifest))


class TestCharts:
    """Test that charts are written as PNG files."""

    def test_dataset_dashboard(self, stats, tmp_path):
        path = chart_dataset(stats, str(tmp_path / "dataset.png"))
        assert path == str(tmp_path / "dataset.png")
        assert (tmp_path / "dataset.png").read_bytes()[:4] == b"\x89PNG"

    def test_dataset_with_split(self, stats, tmp_path):
        durations = pd.DataFrame(
            {"train": stats.class_durations_s, "test": stats.class_durations_s / 4}
        )
        path = chart_dataset(stats, str(tmp_path / "split.png"), durations)
        assert (tmp_path / "split.png").exists()
        assert path.endswith("split.png")

    def test_age_groups(self, stats, tmp_path):
        chart_age_groups(stats, str(tmp_path / "ages.png"))
        assert (tmp_path / "ages.png").stat().st_size > 0

    def test_loss(self, tmp_path):
        history = pd.DataFrame(
            {
                "epoch": [0, 1, 2],
                "lr": [1e-3] * 3,
                "train_loss": [1.2, 0.8, 0.6],
                "train_accuracy": [0.4, 0.6, 0.7],
                "val_loss": [1.1, 0.9, 0.95],
                "val_accuracy": [0.5, 0.6, 0.6],
            }
        )
        chart_loss(history, str(tmp_path / "loss.png"))
        assert (tmp_path / "loss.png").exists()

    def test_loss_and_accuracy_panels(self, monkeypatch):
        """Test that the training chart has a loss and an accuracy panel."""
        figures = []
        monkeypatch.setattr(charts, "_save_chart", lambda fig, output=None: figures.append(fig))
        history = pd.DataFrame(
            {
                "epoch": [0, 1],
                "train_loss": [1.0, 0.5],
                "train_accuracy": [0.5, 0.75],
                "val_loss": [float("nan")] * 2,
                "val_accuracy": [float("nan")] * 2,
            }
        )
        chart_loss(history)
        (fig,) = figures
        assert [ax.get_title() for ax in fig.axes] == ["Training Loss", "Training Accuracy"]
        assert list(fig.axes[1].lines[0].get_ydata()) == [0.5, 0.75]

    def test_empty_history(self):
        with pytest.raises(ValueError):
            chart_loss(pd.DataFrame(columns=["epoch", "train_loss", "val_loss"]))

    def test_default_path(self, stats):
        path = chart_age_groups(stats)
        assert path.endswith(".png")
