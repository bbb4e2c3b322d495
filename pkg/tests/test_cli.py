"""CLI smoke tests for lungsound."""

import json
from dataclasses import replace

import pytest
from click.testing import CliRunner

from lungsound.bench import parse_report
from lungsound.cli import main, run

from .conftest import CONFIGS

SUBCOMMANDS = ["stats", "select", "frame", "train", "eval", "bench", "fixture", "convert"]


@pytest.fixture
def runner():
    """Create a CLI test runner."""
    return CliRunner()


@pytest.fixture
def tiny_yaml(tiny_config, tmp_path):
    """Model config for 5 s frames at 200 Hz."""
    return tiny_config.save(tmp_path / "tiny.yaml")


@pytest.fixture
def train_frames(runner, database, tmp_path):
    out = tmp_path / "train.frames"
    result = runner.invoke(
        main, ["frame", "-m", str(database.train_manifest), "--rate", "200", "-o", str(out)]
    )
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture
def held_out_frames(runner, database, tmp_path):
    out = tmp_path / "test.frames"
    result = runner.invoke(
        main,
        ["frame", "-m", str(database.manifest), "--split", str(database.split), "--part", "test",
         "--rate", "200", "-o", str(out)],
    )
    assert result.exit_code == 0, result.output
    return out


def _train(runner, frames, model_yaml, out, *extra):
    return runner.invoke(
        main,
        ["--seed", "3", "train", "--frames", str(frames), "--model-config", str(model_yaml),
         "--out", str(out), "--epochs", "2", "--batch-size", "64", *extra],
    )


class TestCLIBasics:
    """Test basic CLI functionality."""

    def test_version(self, runner):
        """Test --version flag."""
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0
        assert "0.1.0" in result.output or "version" in result.output.lower()

    def test_help(self, runner):
        """Test --help flag."""
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        assert "Respiratory sound classification toolkit" in result.output
        for cmd in SUBCOMMANDS:
            assert cmd in result.output

    def test_subcommand_help(self, runner):
        """Test help for subcommands."""
        for cmd in SUBCOMMANDS:
            result = runner.invoke(main, [cmd, "--help"])
            assert result.exit_code == 0, f"Help failed for {cmd}: {result.output}"

    def test_no_arguments(self, capsys):
        """Test that a bare invocation prints usage and exits 1."""
        assert run([]) == 1
        assert "Usage" in capsys.readouterr().out

    def test_help_exit_code(self):
        assert run(["--help"]) == 0


class TestExitCodes:
    """Test error categories map to exit codes."""

    def test_missing_manifest(self, tmp_path):
        assert run(["stats", "-m", str(tmp_path / "missing.tsv")]) == 2

    def test_unknown_drop_class(self, database, tmp_path):
        code = run(["select", "-m", str(database.manifest), "-o", str(tmp_path / "out"),
                    "--drop", "Influenza"])
        assert code == 1

    def test_bad_option(self):
        assert run(["frame", "--part", "validation"]) == 1

    def test_bench_without_source(self):
        assert run(["bench"]) == 1

    def test_frame_length_mismatch(self, train_frames, tmp_path):
        """Test that 1000-sample frames are refused by a 220500-sample model."""
        code = run(["train", "--frames", str(train_frames), "--model-config",
                    str(CONFIGS / "audio_only.yaml"), "--out", str(tmp_path / "m.lsm")])
        assert code == 1

    def test_labels_outside_model_classes(self, train_frames, tiny_config, tmp_path):
        """Test that frames labelled outside the model's classes are a usage error."""
        narrow = replace(tiny_config, classes=("URTI", "Healthy")).save(tmp_path / "narrow.yaml")
        code = run(["train", "--frames", str(train_frames), "--model-config", str(narrow),
                    "--out", str(tmp_path / "m.lsm")])
        assert code == 1
        assert not (tmp_path / "m.lsm").exists()

    def test_corrupt_frames(self, tmp_path):
        path = tmp_path / "bad.frames"
        path.write_bytes(b"not frames")
        code = run(["train", "--frames", str(path), "--out", str(tmp_path / "m.lsm")])
        assert code == 2


class TestDataCommands:
    """Test stats, select, frame and fixture."""

    def test_stats_table(self, runner, database):
        result = runner.invoke(main, ["stats", "-m", str(database.train_manifest)])
        assert result.exit_code == 0, result.output
        assert "100 recordings" in result.output
        assert "URTI" in result.output
        assert "380" in result.output

    def test_stats_json(self, runner, database):
        result = runner.invoke(
            main,
            ["--json", "stats", "-m", str(database.manifest), "--split", str(database.split),
             "--window-sweep"],
        )
        assert result.exit_code == 0, result.output
        data = json.loads(result.stdout)
        assert data["recordings"] == 131
        assert data["split_durations_s"]["train"]["URTI"] == 380.0
        assert data["split_durations_s"]["test"]["COPD"] == 140.0
        assert len(data["window_sweep"]) == 10

    def test_stats_charts(self, runner, database, tmp_path):
        result = runner.invoke(
            main,
            ["stats", "-m", str(database.train_manifest), "--chart", str(tmp_path / "d.png"),
             "--age-chart", str(tmp_path / "a.png")],
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "d.png").exists()
        assert (tmp_path / "a.png").exists()

    def test_select(self, runner, database, tmp_path):
        out = tmp_path / "selected"
        result = runner.invoke(main, ["--json", "select", "-m", str(database.manifest), "-o", str(out)])
        assert result.exit_code == 0, result.output
        data = json.loads(result.stdout)
        assert data["selected"] == 123
        for name in ("manifest.tsv", "train.tsv", "test.tsv", "split.yaml"):
            assert (out / name).exists()
        assert {row["Class"] for row in data["classes"]} == {
            "URTI", "Healthy", "COPD", "Bronchiectasis", "Bronchiolitis"
        }

    def test_frame_counts(self, runner, database, tmp_path):
        result = runner.invoke(
            main,
            ["frame", "-m", str(database.train_manifest), "--rate", "200",
             "-o", str(tmp_path / "f.frames")],
        )
        assert result.exit_code == 0, result.output
        assert "1600 frames written" in result.output

    def test_frame_split_side(self, runner, database, tmp_path):
        result = runner.invoke(
            main,
            ["--json", "frame", "-m", str(database.manifest), "--split", str(database.split),
             "--part", "test", "--rate", "200", "--workers", "2", "-o", str(tmp_path / "t.frames")],
        )
        assert result.exit_code == 0, result.output
        data = json.loads(result.stdout)
        assert data["frames"] == 368
        assert sum(data["per_class"].values()) == 368

    def test_fixture(self, runner, tmp_path):
        result = runner.invoke(main, ["fixture", str(tmp_path / "db"), "--rate", "50"])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "db" / "train.tsv").exists()
        assert (tmp_path / "db" / "split.yaml").exists()


class TestModelCommands:
    """Test train, eval and bench."""

    def test_train_is_deterministic(self, runner, train_frames, tiny_yaml, tmp_path):
        """Test identical model bytes and history for the same seed."""
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.lsm"
            result = _train(runner, train_frames, tiny_yaml, out)
            assert result.exit_code == 0, result.output
            outputs.append(out)
        assert outputs[0].read_bytes() == outputs[1].read_bytes()
        history = [p.with_name(p.name + ".history.tsv").read_text() for p in outputs]
        assert history[0] == history[1]
        assert history[0].splitlines()[0].split("\t")[:3] == ["epoch", "lr", "train_loss"]

    def test_train_json(self, runner, train_frames, tiny_yaml, tmp_path):
        out = tmp_path / "m.lsm"
        result = runner.invoke(
            main,
            ["--json", "train", "--frames", str(train_frames), "--model-config", str(tiny_yaml),
             "--out", str(out), "--epochs", "1"],
        )
        assert result.exit_code == 0, result.output
        data = json.loads(result.stdout)
        assert data["epochs_run"] == 1
        assert data["model"] == str(out)
        assert data["params"] > 0

    def test_train_table_and_chart(self, runner, train_frames, tiny_yaml, tmp_path):
        result = _train(runner, train_frames, tiny_yaml, tmp_path / "m.lsm", "--chart",
                        str(tmp_path / "loss.png"))
        assert result.exit_code == 0, result.output
        assert "Best epoch" in result.output
        assert (tmp_path / "loss.png").exists()

    def test_eval_json(self, runner, train_frames, held_out_frames, tiny_yaml, tmp_path):
        model = tmp_path / "m.lsm"
        assert _train(runner, train_frames, tiny_yaml, model).exit_code == 0
        report = tmp_path / "report.json"
        result = runner.invoke(
            main, ["--json", "eval", str(model), "--frames", str(held_out_frames), "-o", str(report)]
        )
        assert result.exit_code == 0, result.output
        data = json.loads(result.stdout)
        entry = data["models"]["tiny"]
        assert entry["report"]["total"] == 368
        assert 0.0 <= entry["report"]["accuracy"] <= 1.0
        assert entry["report"]["subject"]["level"] == "subject"
        assert json.loads(report.read_text()) == data

    def test_eval_table(self, runner, train_frames, held_out_frames, tiny_yaml, tmp_path):
        model = tmp_path / "m.lsm"
        assert _train(runner, train_frames, tiny_yaml, model).exit_code == 0
        result = runner.invoke(main, ["eval", str(model), "--frames", str(held_out_frames)])
        assert result.exit_code == 0, result.output
        assert "Subject-level" in result.output

    def test_bench_reference(self, runner):
        result = runner.invoke(main, ["bench", "--reference"])
        assert result.exit_code == 0, result.output
        assert "Denver CPU 345 MHz" in result.output
        assert "8.81" in result.output

    def test_bench_model_config(self, runner, tiny_yaml, tmp_path):
        out = tmp_path / "bench.json"
        result = runner.invoke(
            main,
            ["bench", "--model-config", str(tiny_yaml), "--runs", "10", "--warmup", "1",
             "--power-mw", "1500", "--label", "laptop", "--format", "structured", "-o", str(out)],
        )
        assert result.exit_code == 0, result.output
        (report,) = parse_report(out.read_text())
        assert report.label == "laptop"
        assert report.runs == 10
        assert report.power_mw == 1500.0
        assert report.energy_j == pytest.approx(1.5 * report.latency_s)

    def test_bench_model_and_config_conflict(self, tiny_yaml, tmp_path):
        code = run(["bench", "--model", str(tmp_path / "m.lsm"), "--model-config", str(tiny_yaml)])
        assert code == 1
