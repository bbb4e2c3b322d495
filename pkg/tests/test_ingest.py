"""Tests for manifests, annotations, statistics, selection and splits."""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from lungsound.audio import write_wav
from lungsound.errors import AnnotationError, EmptySelectionError, ManifestError, SplitError
from lungsound.ingest import (
    Device,
    Diagnosis,
    RecordingMeta,
    Sex,
    SplitSpec,
    age_group,
    apply_demographics,
    apply_split,
    compute_stats,
    convert_database,
    load_cycles,
    load_demographics,
    load_manifest,
    load_split,
    save_split,
    select_subset,
    split_subjects,
    write_manifest,
)
from lungsound.synth import TEST_COUNTS, TRAIN_COUNTS

HEADER = "subject_id\tdiagnosis\tdevice\tage_years\tsex\taudio_path\tannotation_path\n"


def _wav(path: Path, seconds: float = 20.0, rate: int = 100) -> Path:
    return write_wav(path, np.zeros(int(seconds * rate)), rate)


class TestLoadManifest:
    """Test manifest parsing."""

    def test_single_row_reads_duration_from_wav(self, tmp_path):
        """Test a 1-row manifest pointing at a 20 s WAV."""
        _wav(tmp_path / "a.wav")
        manifest = tmp_path / "m.tsv"
        manifest.write_text(HEADER + "101\tCOPD\tMeditron\t70\tM\ta.wav\t\n")

        recordings = load_manifest(manifest)
        assert len(recordings) == 1
        r = recordings[0]
        assert r.duration_s == 20.0
        assert r.diagnosis == Diagnosis.COPD
        assert r.device == Device.MEDITRON
        assert r.audio_path == tmp_path / "a.wav"
        assert r.recording_id == "a"

    def test_header_only(self, tmp_path):
        """Test that an empty manifest gives an empty list."""
        manifest = tmp_path / "m.tsv"
        manifest.write_text(HEADER)
        assert load_manifest(manifest) == []

    def test_unknown_class_token(self, tmp_path):
        """Test that a bad class token names the row and the token."""
        _wav(tmp_path / "a.wav")
        manifest = tmp_path / "m.tsv"
        manifest.write_text(
            HEADER
            + "101\tCOPD\tMeditron\t70\tM\ta.wav\t\n"
            + "102\tASTMA\tMeditron\t40\tF\ta.wav\t\n"
        )
        with pytest.raises(ManifestError) as exc:
            load_manifest(manifest)
        assert exc.value.row == 2
        assert exc.value.field == "diagnosis"
        assert "ASTMA" in str(exc.value)

    def test_comma_separated_with_duration_column(self, tmp_path):
        """Test delimiter sniffing and the optional duration column."""
        (tmp_path / "a.wav").touch()
        manifest = tmp_path / "m.csv"
        manifest.write_text(
            "subject_id,diagnosis,device,age_years,sex,audio_path,annotation_path,duration_s\n"
            "7,Healthy,AKGC417L,NA,,a.wav,,12.5\n"
        )
        r = load_manifest(manifest)[0]
        assert r.duration_s == 12.5
        assert r.device == Device.MICROPHONE
        assert r.age_years is None
        assert r.sex == Sex.UNKNOWN

    def test_missing_audio_file(self, tmp_path):
        """Test that a missing WAV is reported with its field."""
        manifest = tmp_path / "m.tsv"
        manifest.write_text(HEADER + "101\tCOPD\tMeditron\t70\tM\tmissing.wav\t\n")
        with pytest.raises(ManifestError) as exc:
            load_manifest(manifest)
        assert exc.value.field == "audio_path"

    def test_negative_age(self, tmp_path):
        """Test that negative ages are rejected."""
        _wav(tmp_path / "a.wav")
        manifest = tmp_path / "m.tsv"
        manifest.write_text(HEADER + "101\tCOPD\tMeditron\t-3\tM\ta.wav\t\n")
        with pytest.raises(ManifestError) as exc:
            load_manifest(manifest)
        assert exc.value.field == "age_years"

    def test_annotations_loaded(self, tmp_path):
        """Test that annotation files become cycles."""
        _wav(tmp_path / "a.wav")
        (tmp_path / "a.txt").write_text("0.0\t2.5\t0\t1\n2.5\t5.0\t1\t0\n")
        manifest = tmp_path / "m.tsv"
        manifest.write_text(HEADER + "101\tCOPD\tMeditron\t70\tM\ta.wav\ta.txt\n")
        r = load_manifest(manifest)[0]
        assert len(r.cycles) == 2
        assert r.cycles[1].crackles

    def test_cycle_past_recording_end(self, tmp_path):
        """Test that annotations beyond the audio length are rejected."""
        _wav(tmp_path / "a.wav", seconds=2.0)
        (tmp_path / "a.txt").write_text("0.0 2.5 0 1\n")
        manifest = tmp_path / "m.tsv"
        manifest.write_text(HEADER + "101\tCOPD\tMeditron\t70\tM\ta.wav\ta.txt\n")
        with pytest.raises(ManifestError):
            load_manifest(manifest)

    def test_missing_manifest(self, tmp_path):
        """Test that a missing manifest raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_manifest(tmp_path / "nope.tsv")

    def test_write_then_load(self, tmp_path, make_recording):
        """Test that written manifests load back to the same rows."""
        recordings = [make_recording("1", age=None), make_recording("2", Diagnosis.URTI, age=3.5)]
        path = write_manifest(recordings, tmp_path / "out" / "m.tsv")
        loaded = load_manifest(path)
        assert [r.subject_id for r in loaded] == ["1", "2"]
        assert loaded[0].age_years is None
        assert loaded[1].age_years == 3.5
        assert loaded[1].audio_path.resolve() == recordings[1].audio_path.resolve()


class TestLoadCycles:
    """Test annotation parsing."""

    def test_single_row(self, tmp_path):
        """Test the direct field mapping of one row."""
        path = tmp_path / "a.txt"
        path.write_text("0.0 2.5 0 1\n")
        cycles = load_cycles(path)
        assert len(cycles) == 1
        c = cycles[0]
        assert (c.start_s, c.end_s, c.crackles, c.wheezes) == (0.0, 2.5, False, True)
        assert c.duration_s == 2.5

    def test_empty_file(self, tmp_path):
        """Test that an empty file gives no cycles."""
        path = tmp_path / "a.txt"
        path.write_text("")
        assert load_cycles(path) == []

    def test_inverted_interval(self, tmp_path):
        """Test that end before start is an error."""
        path = tmp_path / "a.txt"
        path.write_text("3.0 2.0 0 0\n")
        with pytest.raises(AnnotationError) as exc:
            load_cycles(path)
        assert exc.value.row == 1

    def test_wrong_field_count(self, tmp_path):
        """Test that short rows are rejected with their row number."""
        path = tmp_path / "a.txt"
        path.write_text("0.0 1.0 0 0\n1.0 2.0 0\n")
        with pytest.raises(AnnotationError) as exc:
            load_cycles(path)
        assert exc.value.row == 2

    def test_non_monotone(self, tmp_path):
        """Test that cycles must be ordered by start time."""
        path = tmp_path / "a.txt"
        path.write_text("2.0 3.0 0 0\n1.0 2.0 0 0\n")
        with pytest.raises(AnnotationError):
            load_cycles(path)


class TestComputeStats:
    """Test dataset statistics."""

    def test_table_fixture_train_set(self, database):
        """Test durations and cycle counts of the fixture's train manifest."""
        stats = compute_stats(load_manifest(database.train_manifest))
        assert stats.class_durations_s.to_dict() == {
            "URTI": 380.0,
            "Healthy": 560.0,
            "COPD": 580.0,
            "Bronchiectasis": 260.0,
            "Bronchiolitis": 220.0,
        }
        assert stats.class_cycle_counts.tolist() == [207, 257, 406, 88, 141]
        assert stats.class_counts.tolist() == [c[0] for c in TRAIN_COUNTS.values()]

    def test_table_fixture_test_set(self, database):
        """Test subject counts of the fixture's test manifest."""
        stats = compute_stats(load_manifest(database.test_manifest))
        assert stats.class_counts.tolist() == [c[0] for c in TEST_COUNTS.values()]
        assert stats.class_durations_s.sum() == 460.0

    def test_single_recording(self, make_recording):
        """Test that one recording's values are the totals."""
        stats = compute_stats([make_recording(duration_s=10.0, age=42.0)])
        assert stats.total_subjects == 1
        assert stats.class_durations_s["COPD"] == 10.0
        assert stats.class_by_age_group.loc["COPD", 4] == 1
        assert stats.class_by_age_group.to_numpy().sum() == 1
        assert stats.class_by_device.loc["COPD", "Meditron"] == 1

    def test_subject_counted_once_per_class(self, make_recording):
        """Test that two recordings of one subject add durations but one subject."""
        recordings = [
            make_recording("1", duration_s=10.0),
            make_recording("1", duration_s=15.0),
            make_recording("2", Diagnosis.URTI, duration_s=5.0, age=4.0),
        ]
        stats = compute_stats(recordings)
        assert stats.class_counts["COPD"] == 1
        assert stats.class_durations_s["COPD"] == 25.0
        assert stats.class_counts["URTI"] == 1
        assert list(stats.class_counts.index) == ["URTI", "COPD"]

    def test_unknown_age(self, make_recording):
        """Test that unknown ages stay out of the age matrix."""
        stats = compute_stats([make_recording("1", age=None), make_recording("2", age=60.0)])
        assert stats.unknown_age_subjects["COPD"] == 1
        assert stats.class_by_age_group.to_numpy().sum() == 1

    def test_cycle_summary(self, make_recording, cycle):
        """Test the per-class respiratory cycle summary."""
        stats = compute_stats([make_recording(cycles=[cycle])])
        row = stats.cycle_summary.loc["COPD"]
        assert row["mean_cycle_s"] == 2.5
        assert row["wheeze_cycles"] == 1
        assert row["crackle_cycles"] == 0

    def test_order_independent(self, database):
        """Test that shuffling the manifest rows leaves every statistic unchanged."""
        recordings = load_manifest(database.manifest)
        expected = compute_stats(recordings)
        rng = np.random.default_rng(0)
        for _ in range(5):
            shuffled = [recordings[i] for i in rng.permutation(len(recordings))]
            stats = compute_stats(shuffled)
            pd.testing.assert_series_equal(stats.class_counts, expected.class_counts)
            pd.testing.assert_series_equal(stats.class_durations_s, expected.class_durations_s)
            pd.testing.assert_series_equal(stats.class_cycle_counts, expected.class_cycle_counts)
            pd.testing.assert_frame_equal(stats.class_by_age_group, expected.class_by_age_group)
            pd.testing.assert_frame_equal(stats.class_by_device, expected.class_by_device)
            pd.testing.assert_frame_equal(stats.cycle_summary, expected.cycle_summary)

    def test_durations_add_up(self, make_recording):
        """Test that per-class durations sum to the total recorded time."""
        rng = np.random.default_rng(3)
        for _ in range(50):
            recordings = [
                make_recording(str(rng.integers(0, 20)), list(Diagnosis)[rng.integers(0, 8)],
                               duration_s=float(rng.uniform(0.5, 60.0)), name="r.wav")
                for _ in range(rng.integers(1, 30))
            ]
            stats = compute_stats(recordings)
            total = sum(r.duration_s for r in recordings)
            assert abs(stats.class_durations_s.sum() - total) <= 1e-9

    def test_empty_input(self):
        """Test that empty input is an error unless allowed."""
        from lungsound.errors import DataError

        with pytest.raises(DataError):
            compute_stats([])

    def test_to_dict(self, make_recording):
        """Test the JSON view."""
        data = compute_stats([make_recording()]).to_dict()
        assert data["class_counts"] == {"COPD": 1}
        assert len(data["class_by_age_group"]["COPD"]) == 10


class TestAgeGroup:
    """Test decade binning."""

    def test_bins(self):
        """Test binning and clamping."""
        assert age_group(5) == 0
        assert age_group(10) == 1
        assert age_group(95) == 9
        assert age_group(130) == 9

    def test_negative(self):
        with pytest.raises(ValueError):
            age_group(-1)


class TestSelectSubset:
    """Test device and class filtering."""

    def test_fixture_selection(self, database):
        """Test that only Meditron recordings of retained classes survive."""
        recordings = load_manifest(database.manifest)
        dropped = [Diagnosis.ASTHMA, Diagnosis.LRTI, Diagnosis.PNEUMONIA]
        selected = select_subset(recordings, Device.MEDITRON, dropped)

        expected = [
            r for r in recordings if r.device == Device.MEDITRON and r.diagnosis not in dropped
        ]
        assert selected == expected
        assert {r.diagnosis for r in selected} == set(TRAIN_COUNTS)

    def test_identity(self, make_recording):
        """Test that nothing is dropped when everything matches."""
        recordings = [make_recording("1"), make_recording("2", Diagnosis.URTI)]
        assert select_subset(recordings, Device.MEDITRON, []) == recordings

    def test_idempotent(self, database):
        """Test that selecting a selection changes nothing."""
        recordings = load_manifest(database.manifest)
        dropped = [Diagnosis.ASTHMA, Diagnosis.PNEUMONIA]
        once = select_subset(recordings, Device.MEDITRON, dropped)
        assert select_subset(once, Device.MEDITRON, dropped) == once

    def test_device_without_rows(self, make_recording):
        """Test that a device with no recordings raises."""
        with pytest.raises(EmptySelectionError):
            select_subset([make_recording()], Device.LITTMANN_3200)

    def test_everything_dropped(self, make_recording):
        """Test that dropping every class raises."""
        with pytest.raises(EmptySelectionError):
            select_subset([make_recording()], Device.MEDITRON, [Diagnosis.COPD])


class TestSplitSubjects:
    """Test subject-exclusive splitting."""

    def test_table_fixture(self, database):
        """Test disjointness and class coverage on the fixture."""
        recordings = load_manifest(database.train_manifest) + load_manifest(database.test_manifest)
        split = split_subjects(recordings, 0.19, seed=3)
        assert not split.train_subjects & split.test_subjects
        train, test = apply_split(recordings, split)
        assert {r.diagnosis for r in train} == set(TRAIN_COUNTS)
        assert {r.diagnosis for r in test} == set(TRAIN_COUNTS)
        assert len(train) + len(test) == len(recordings)

    def test_two_subjects(self, make_recording):
        """Test that two subjects go one to each side."""
        recordings = [make_recording("1"), make_recording("2")]
        split = split_subjects(recordings, 0.5, seed=0)
        assert len(split.train_subjects) == 1
        assert len(split.test_subjects) == 1

    def test_deterministic(self, database):
        """Test that the same seed yields the same split."""
        recordings = load_manifest(database.train_manifest)
        assert split_subjects(recordings, 0.19, 11) == split_subjects(recordings, 0.19, 11)

    def test_single_subject_class(self, make_recording):
        """Test that a one-subject class names itself in the error."""
        recordings = [make_recording("1"), make_recording("2"), make_recording("3", Diagnosis.URTI)]
        with pytest.raises(SplitError) as exc:
            split_subjects(recordings, 0.2, seed=0)
        assert exc.value.diagnosis == "URTI"

    def test_invariants_random_cases(self):
        """Test disjointness and coverage over 1000 random manifests."""
        rng = np.random.default_rng(0)
        classes = list(Diagnosis)[:5]
        for case in range(1000):
            recordings = []
            subject = 0
            for diagnosis in classes[: rng.integers(1, 6)]:
                for _ in range(rng.integers(2, 6)):
                    subject += 1
                    for _ in range(rng.integers(1, 4)):
                        recordings.append(
                            RecordingMeta(
                                subject_id=str(subject),
                                diagnosis=diagnosis,
                                device=Device.MEDITRON,
                                age_years=None,
                                sex=Sex.UNKNOWN,
                                audio_path=Path(f"{subject}.wav"),
                                duration_s=float(rng.uniform(5, 30)),
                            )
                        )
            fraction = float(rng.uniform(0.05, 0.95))
            split = split_subjects(recordings, fraction, seed=case)

            all_subjects = {r.subject_id for r in recordings}
            assert not split.train_subjects & split.test_subjects
            assert split.train_subjects | split.test_subjects == all_subjects
            for diagnosis in {r.diagnosis for r in recordings}:
                subjects = {r.subject_id for r in recordings if r.diagnosis == diagnosis}
                assert subjects & split.train_subjects
                assert subjects & split.test_subjects

    def test_save_and_load(self, tmp_path):
        """Test the YAML split file."""
        split = SplitSpec(frozenset({"1", "2"}), frozenset({"3"}), (Diagnosis.COPD,))
        path = save_split(split, tmp_path / "split.yaml")
        assert load_split(path) == split

    def test_overlap_rejected(self):
        """Test that a subject cannot be on both sides."""
        with pytest.raises(SplitError):
            SplitSpec(frozenset({"1"}), frozenset({"1"}))


class TestDemographics:
    """Test external demographics tables."""

    def test_override(self, tmp_path, make_recording):
        """Test that table values replace manifest values."""
        path = tmp_path / "demo.tsv"
        path.write_text("subject_id\tage_years\tsex\n1\t33\tF\n9\tNA\tM\n")
        table = load_demographics(path)
        assert table == {"1": (33.0, Sex.F), "9": (None, Sex.M)}

        updated = apply_demographics([make_recording("1"), make_recording("2")], table)
        assert updated[0].age_years == 33.0
        assert updated[0].sex == Sex.F
        assert updated[1].age_years == 70.0

    def test_bad_sex_token(self, tmp_path):
        """Test that unknown sex tokens name the field."""
        path = tmp_path / "demo.csv"
        path.write_text("subject_id,age_years,sex\n1,33,X\n")
        with pytest.raises(ManifestError) as exc:
            load_demographics(path)
        assert exc.value.field == "sex"


class TestConvertDatabase:
    """Test conversion of the public database layout."""

    def test_convert(self, tmp_path):
        """Test that a miniature public layout becomes a loadable manifest."""
        root = tmp_path / "db"
        audio = root / "audio_and_txt_files"
        audio.mkdir(parents=True)
        (root / "patient_diagnosis.csv").write_text("101,URTI\n102,COPD\n")
        (root / "demographic_info.txt").write_text("101 3 F NA 19 99\n102 70 M 33.0 NA NA\n")
        _wav(audio / "101_1b1_Al_sc_Meditron.wav", seconds=4.0)
        (audio / "101_1b1_Al_sc_Meditron.txt").write_text("0.1\t1.5\t0\t0\n")
        _wav(audio / "102_1b1_Tc_mc_AKGC417L.wav", seconds=6.0)
        (audio / "notes.wav").write_bytes(b"")

        df = convert_database(root, tmp_path / "manifest.tsv")
        assert len(df) == 2

        recordings = load_manifest(tmp_path / "manifest.tsv")
        first, second = recordings
        assert first.diagnosis == Diagnosis.URTI
        assert first.device == Device.MEDITRON
        assert first.age_years == 3.0
        assert first.sex == Sex.F
        assert len(first.cycles) == 1
        assert second.device == Device.MICROPHONE
        assert second.duration_s == 6.0
