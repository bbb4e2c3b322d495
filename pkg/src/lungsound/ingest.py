"""Dataset manifests, cycle annotations, statistics and subject-exclusive splits."""

import logging
import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import pandas as pd
import yaml

from .config import DEVICE_ALIASES, N_AGE_GROUPS
from .errors import (
    AnnotationError,
    ConfigError,
    DataError,
    EmptySelectionError,
    ManifestError,
    SplitError,
)

log = logging.getLogger(__name__)

MANIFEST_COLUMNS = [
    "subject_id",
    "diagnosis",
    "device",
    "age_years",
    "sex",
    "audio_path",
    "annotation_path",
]

_MISSING_TOKENS = {"", "na", "nan", "none", "unknown"}


class Diagnosis(str, Enum):
    """Respiratory condition label of a subject."""

    URTI = "URTI"
    HEALTHY = "Healthy"
    COPD = "COPD"
    BRONCHIECTASIS = "Bronchiectasis"
    BRONCHIOLITIS = "Bronchiolitis"
    ASTHMA = "Asthma"
    LRTI = "LRTI"
    PNEUMONIA = "Pneumonia"

    @property
    def order(self) -> int:
        return list(Diagnosis).index(self)

    @classmethod
    def parse(cls, token: str) -> "Diagnosis":
        for member in cls:
            if member.value.lower() == token.strip().lower():
                return member
        raise ValueError(f"unknown diagnosis '{token}'")


class Device(str, Enum):
    """Recording equipment."""

    MICROPHONE = "Microphone"
    LITTMANN_CLASSIC = "LittmannClassic"
    LITTMANN_3200 = "Littmann3200"
    MEDITRON = "Meditron"

    @classmethod
    def parse(cls, token: str) -> "Device":
        token = token.strip()
        token = DEVICE_ALIASES.get(token, token)
        for member in cls:
            if member.value.lower() == token.lower():
                return member
        raise ValueError(f"unknown device '{token}'")


class Sex(str, Enum):
    M = "M"
    F = "F"
    UNKNOWN = "Unknown"

    @classmethod
    def parse(cls, token: str) -> "Sex":
        token = token.strip()
        if token.lower() in _MISSING_TOKENS:
            return cls.UNKNOWN
        for member in cls:
            if member.value.lower() == token.lower():
                return member
        raise ValueError(f"unknown sex '{token}'")


@dataclass(frozen=True)
class CycleAnnotation:
    """One annotated respiratory cycle."""

    start_s: float
    end_s: float
    crackles: bool = False
    wheezes: bool = False

    def __post_init__(self) -> None:
        if not self.start_s < self.end_s:
            raise DataError(f"cycle start {self.start_s} is not before end {self.end_s}")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class RecordingMeta:
    """One subject recording."""

    subject_id: str
    diagnosis: Diagnosis
    device: Device
    age_years: float | None
    sex: Sex
    audio_path: Path
    duration_s: float
    cycles: tuple[CycleAnnotation, ...] = ()
    annotation_path: Path | None = None

    def __post_init__(self) -> None:
        if not self.duration_s > 0:
            raise DataError(f"{self.audio_path}: duration must be positive, got {self.duration_s}")
        if self.age_years is not None and self.age_years < 0:
            raise DataError(f"{self.audio_path}: negative age {self.age_years}")
        for cycle in self.cycles:
            if cycle.start_s < -1e-9 or cycle.end_s > self.duration_s + 1e-6:
                raise DataError(
                    f"{self.audio_path}: cycle [{cycle.start_s}, {cycle.end_s}] outside "
                    f"[0, {self.duration_s}]"
                )

    @property
    def recording_id(self) -> str:
        return self.audio_path.stem


@dataclass
class DatasetStats:
    """Subject- and recording-level statistics of a manifest."""

    class_counts: pd.Series
    class_by_age_group: pd.DataFrame
    class_by_device: pd.DataFrame
    class_durations_s: pd.Series
    class_cycle_counts: pd.Series
    unknown_age_subjects: pd.Series
    cycle_summary: pd.DataFrame
    age_group_width_years: float = 10.0

    @property
    def total_subjects(self) -> int:
        return int(self.class_counts.sum())

    def to_dict(self) -> dict[str, Any]:
        """Plain-Python view for JSON output."""
        return {
            "class_counts": {k: int(v) for k, v in self.class_counts.items()},
            "class_by_age_group": {
                k: [int(x) for x in row] for k, row in self.class_by_age_group.iterrows()
            },
            "class_by_device": {
                k: {d: int(x) for d, x in row.items()} for k, row in self.class_by_device.iterrows()
            },
            "class_durations_s": {k: float(v) for k, v in self.class_durations_s.items()},
            "class_cycle_counts": {k: int(v) for k, v in self.class_cycle_counts.items()},
            "unknown_age_subjects": {k: int(v) for k, v in self.unknown_age_subjects.items()},
            "cycle_summary": {
                k: {c: float(x) for c, x in row.items()} for k, row in self.cycle_summary.iterrows()
            },
            "age_group_width_years": self.age_group_width_years,
        }


@dataclass(frozen=True)
class SplitSpec:
    """Subject-exclusive train/test assignment."""

    train_subjects: frozenset[str]
    test_subjects: frozenset[str]
    classes: tuple[Diagnosis, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        overlap = self.train_subjects & self.test_subjects
        if overlap:
            raise SplitError("*", f"subjects on both sides of the split: {sorted(overlap)}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "classes": [c.value for c in self.classes],
            "train_subjects": sorted(self.train_subjects),
            "test_subjects": sorted(self.test_subjects),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SplitSpec":
        return cls(
            train_subjects=frozenset(str(s) for s in data.get("train_subjects", [])),
            test_subjects=frozenset(str(s) for s in data.get("test_subjects", [])),
            classes=tuple(Diagnosis.parse(c) for c in data.get("classes", [])),
        )


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _sniff_delimiter(path: Path) -> str:
    with open(path, encoding="utf-8") as f:
        header = f.readline()
    return "\t" if "\t" in header else ","


def _is_missing(token: str) -> bool:
    return token.strip().lower() in _MISSING_TOKENS


def _resolve(base: Path, token: str) -> Path:
    path = Path(token.strip())
    return path if path.is_absolute() else base / path


def load_cycles(path: Path | str) -> list[CycleAnnotation]:
    """Parse a whitespace-separated annotation file (start end crackles wheezes).

    Raises:
        AnnotationError: non-numeric field, wrong field count, inverted or
            non-monotone interval.
    """
    path = Path(path)
    cycles: list[CycleAnnotation] = []
    previous_start = -math.inf
    row = 0
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row += 1
        parts = line.split()
        if len(parts) != 4:
            raise AnnotationError(path, row, f"expected 4 fields, found {len(parts)}")
        try:
            start, end = float(parts[0]), float(parts[1])
            crackles, wheezes = int(parts[2]), int(parts[3])
        except ValueError as e:
            raise AnnotationError(path, row, f"non-numeric field ({e})") from e
        if crackles not in (0, 1) or wheezes not in (0, 1):
            raise AnnotationError(path, row, "crackle/wheeze flags must be 0 or 1")
        if not start < end:
            raise AnnotationError(path, row, f"inverted interval {start} >= {end}")
        if start < previous_start:
            raise AnnotationError(path, row, f"non-monotone start {start} < {previous_start}")
        previous_start = start
        cycles.append(CycleAnnotation(start, end, bool(crackles), bool(wheezes)))
    return cycles


def _parse_row(path: Path, row: int, rec: dict[str, str], has_duration: bool) -> RecordingMeta:
    base = path.parent

    subject_id = rec["subject_id"].strip()
    if not subject_id:
        raise ManifestError(path, row, "subject_id", "empty subject id")

    try:
        diagnosis = Diagnosis.parse(rec["diagnosis"])
    except ValueError:
        raise ManifestError(path, row, "diagnosis", f"unknown class token '{rec['diagnosis']}'")
    try:
        device = Device.parse(rec["device"])
    except ValueError:
        raise ManifestError(path, row, "device", f"unknown device token '{rec['device']}'")
    try:
        sex = Sex.parse(rec["sex"])
    except ValueError:
        raise ManifestError(path, row, "sex", f"unknown sex token '{rec['sex']}'")

    age: float | None = None
    if not _is_missing(rec["age_years"]):
        try:
            age = float(rec["age_years"])
        except ValueError:
            raise ManifestError(path, row, "age_years", f"not a number: '{rec['age_years']}'")
        if age < 0 or not math.isfinite(age):
            raise ManifestError(path, row, "age_years", f"invalid age {age}")

    if not rec["audio_path"].strip():
        raise ManifestError(path, row, "audio_path", "empty audio path")
    audio_path = _resolve(base, rec["audio_path"])
    if not audio_path.exists():
        raise ManifestError(path, row, "audio_path", f"audio file not found: {audio_path}")

    duration: float | None = None
    if has_duration and not _is_missing(rec.get("duration_s", "")):
        try:
            duration = float(rec["duration_s"])
        except ValueError:
            raise ManifestError(path, row, "duration_s", f"not a number: '{rec['duration_s']}'")
    if duration is None:
        from .audio import read_wav_info

        duration = read_wav_info(audio_path).duration_s
    if not duration > 0:
        raise ManifestError(path, row, "duration_s", f"duration must be positive, got {duration}")

    annotation_path: Path | None = None
    cycles: list[CycleAnnotation] = []
    token = rec.get("annotation_path", "")
    if token.strip():
        annotation_path = _resolve(base, token)
        if not annotation_path.exists():
            raise ManifestError(path, row, "annotation_path", f"file not found: {annotation_path}")
        cycles = load_cycles(annotation_path)
        for cycle in cycles:
            if cycle.end_s > duration + 1e-6:
                raise ManifestError(
                    path,
                    row,
                    "annotation_path",
                    f"cycle ends at {cycle.end_s}s beyond recording length {duration}s",
                )

    return RecordingMeta(
        subject_id=subject_id,
        diagnosis=diagnosis,
        device=device,
        age_years=age,
        sex=sex,
        audio_path=audio_path,
        duration_s=duration,
        cycles=tuple(cycles),
        annotation_path=annotation_path,
    )


def load_manifest(path: Path | str, delimiter: str | None = None) -> list[RecordingMeta]:
    """Load a recording manifest.

    Args:
        path: UTF-8 delimiter-separated file with a header row.
        delimiter: Column separator; sniffed from the header (tab or comma) when None.

    Returns:
        One RecordingMeta per data row, in file order.

    Raises:
        FileNotFoundError: manifest missing.
        ManifestError: malformed row, unknown token or missing audio file. Rows
            are numbered from 1 for the first line after the header.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Manifest not found at {path}")

    sep = delimiter or _sniff_delimiter(path)
    df = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False, encoding="utf-8")
    df.columns = [c.strip() for c in df.columns]

    for column in MANIFEST_COLUMNS:
        if column not in df.columns and column != "annotation_path":
            raise ManifestError(path, 0, column, "missing column in header")
    has_duration = "duration_s" in df.columns

    recordings = [
        _parse_row(path, row, rec, has_duration)
        for row, rec in enumerate(df.to_dict(orient="records"), start=1)
    ]
    log.info("Loaded %d recordings from %s", len(recordings), path)
    return recordings


def write_manifest(recordings: Sequence[RecordingMeta], path: Path | str) -> Path:
    """Write recordings as a tab-separated manifest (with durations)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.parent.resolve()

    def rel(p: Path | None) -> str:
        if p is None:
            return ""
        try:
            return os.path.relpath(Path(p).resolve(), base)
        except ValueError:
            return str(Path(p).resolve())

    df = pd.DataFrame(
        [
            {
                "subject_id": r.subject_id,
                "diagnosis": r.diagnosis.value,
                "device": r.device.value,
                "age_years": "" if r.age_years is None else repr(float(r.age_years)),
                "sex": r.sex.value,
                "audio_path": rel(r.audio_path),
                "annotation_path": rel(r.annotation_path),
                "duration_s": repr(float(r.duration_s)),
            }
            for r in recordings
        ],
        columns=MANIFEST_COLUMNS + ["duration_s"],
    )
    df.to_csv(path, sep="\t", index=False, lineterminator="\n")
    return path


def load_demographics(path: Path | str) -> dict[str, tuple[float | None, Sex]]:
    """Load an externally estimated demographics table.

    The file has columns subject_id, age_years, sex (tab or comma separated).
    """
    path = Path(path)
    df = pd.read_csv(path, sep=_sniff_delimiter(path), dtype=str, keep_default_na=False)
    table: dict[str, tuple[float | None, Sex]] = {}
    for row, rec in enumerate(df.to_dict(orient="records"), start=1):
        age_token = rec.get("age_years", "")
        try:
            age = None if _is_missing(age_token) else float(age_token)
        except ValueError:
            raise ManifestError(path, row, "age_years", f"not a number: '{age_token}'")
        if age is not None and age < 0:
            raise ManifestError(path, row, "age_years", f"negative age {age}")
        try:
            sex = Sex.parse(rec.get("sex", ""))
        except ValueError:
            raise ManifestError(path, row, "sex", f"unknown sex token '{rec.get('sex')}'")
        table[str(rec["subject_id"]).strip()] = (age, sex)
    return table


def apply_demographics(
    recordings: Iterable[RecordingMeta], table: dict[str, tuple[float | None, Sex]]
) -> list[RecordingMeta]:
    """Override manifest demographics with values from ``table`` where present."""
    out = []
    for r in recordings:
        if r.subject_id in table:
            age, sex = table[r.subject_id]
            r = replace(r, age_years=age, sex=sex)
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def age_group(age_years: float, width_years: float = 10.0, n_groups: int = N_AGE_GROUPS) -> int:
    """Index of the age bin: floor(age / width), clamped to the last group."""
    if age_years < 0:
        raise ValueError(f"negative age {age_years}")
    return min(int(math.floor(age_years / width_years)), n_groups - 1)


def _recordings_frame(recordings: Sequence[RecordingMeta]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "subject_id": [r.subject_id for r in recordings],
            "diagnosis": [r.diagnosis.value for r in recordings],
            "device": [r.device.value for r in recordings],
            "age_years": [np.nan if r.age_years is None else r.age_years for r in recordings],
            "duration_s": [r.duration_s for r in recordings],
            "cycles": [len(r.cycles) for r in recordings],
        },
        columns=["subject_id", "diagnosis", "device", "age_years", "duration_s", "cycles"],
    )


def _class_order(recordings: Sequence[RecordingMeta]) -> list[Diagnosis]:
    present = {r.diagnosis for r in recordings}
    return [d for d in Diagnosis if d in present]


def compute_stats(
    recordings: Sequence[RecordingMeta],
    age_group_width_years: float = 10.0,
    n_age_groups: int = N_AGE_GROUPS,
    allow_empty: bool = False,
) -> DatasetStats:
    """Compute per-class subject, age, device, duration and cycle statistics.

    Subjects count once per class; durations and cycles count every recording.
    Subjects without a known age are left out of the age matrix and counted in
    ``unknown_age_subjects`` instead.
    """
    if age_group_width_years <= 0:
        raise ConfigError(f"age group width must be positive, got {age_group_width_years}")
    if not recordings and not allow_empty:
        raise DataError("cannot compute statistics of an empty recording list")

    classes = [d.value for d in (_class_order(recordings) or list(Diagnosis))]
    devices = [d.value for d in Device]
    df = _recordings_frame(recordings)

    subjects = (
        df.groupby(["diagnosis", "subject_id"], sort=True)
        .agg(age_years=("age_years", "min"))
        .reset_index()
    )
    class_counts = (
        subjects.groupby("diagnosis").size().reindex(classes, fill_value=0).astype(int)
    )

    known = subjects.dropna(subset=["age_years"]).copy()
    known["group"] = [
        age_group(a, age_group_width_years, n_age_groups) for a in known["age_years"]
    ]
    by_age = (
        known.groupby(["diagnosis", "group"])
        .size()
        .unstack(fill_value=0)
        .reindex(index=classes, columns=range(n_age_groups), fill_value=0)
        .astype(int)
    )
    unknown_age = (
        subjects[subjects["age_years"].isna()]
        .groupby("diagnosis")
        .size()
        .reindex(classes, fill_value=0)
        .astype(int)
    )

    by_device = (
        df.drop_duplicates(["diagnosis", "device", "subject_id"])
        .groupby(["diagnosis", "device"])
        .size()
        .unstack(fill_value=0)
        .reindex(index=classes, columns=devices, fill_value=0)
        .astype(int)
    )

    durations = (
        df.groupby("diagnosis")["duration_s"].agg(math.fsum).reindex(classes, fill_value=0.0)
    ).astype(float)
    cycle_counts = df.groupby("diagnosis")["cycles"].sum().reindex(classes, fill_value=0)

    stats = DatasetStats(
        class_counts=class_counts,
        class_by_age_group=by_age,
        class_by_device=by_device,
        class_durations_s=durations,
        class_cycle_counts=cycle_counts.astype(int),
        unknown_age_subjects=unknown_age,
        cycle_summary=_cycle_summary(recordings, classes),
        age_group_width_years=age_group_width_years,
    )
    for frame in (stats.class_counts, stats.class_durations_s, stats.class_cycle_counts):
        frame.index.name = "diagnosis"
    return stats


def _cycle_summary(recordings: Sequence[RecordingMeta], classes: list[str]) -> pd.DataFrame:
    rows = [
        {
            "diagnosis": r.diagnosis.value,
            "duration_s": c.duration_s,
            "crackles": int(c.crackles),
            "wheezes": int(c.wheezes),
        }
        for r in recordings
        for c in r.cycles
    ]
    columns = ["mean_cycle_s", "max_cycle_s", "crackle_cycles", "wheeze_cycles"]
    if not rows:
        return pd.DataFrame(0.0, index=pd.Index(classes, name="diagnosis"), columns=columns)
    cycles = pd.DataFrame(rows)
    summary = cycles.groupby("diagnosis").agg(
        mean_cycle_s=("duration_s", "mean"),
        max_cycle_s=("duration_s", "max"),
        crackle_cycles=("crackles", "sum"),
        wheeze_cycles=("wheezes", "sum"),
    )
    return summary.reindex(classes, fill_value=0.0).astype(float)


# ---------------------------------------------------------------------------
# Selection and splitting
# ---------------------------------------------------------------------------


def select_subset(
    recordings: Sequence[RecordingMeta],
    keep_device: Device,
    drop_classes: Iterable[Diagnosis] = (),
) -> list[RecordingMeta]:
    """Keep recordings from ``keep_device`` whose diagnosis is not dropped.

    Raises:
        EmptySelectionError: the device has no recordings, or nothing survives.
    """
    keep_device = Device(keep_device)
    dropped = {Diagnosis(d) for d in drop_classes}
    if not any(r.device == keep_device for r in recordings):
        raise EmptySelectionError(f"no recordings from device {keep_device.value}")
    selected = [r for r in recordings if r.device == keep_device and r.diagnosis not in dropped]
    if not selected:
        raise EmptySelectionError(
            f"no {keep_device.value} recordings left after dropping "
            f"{sorted(d.value for d in dropped)}"
        )
    log.info("Selected %d of %d recordings", len(selected), len(recordings))
    return selected


def split_subjects(
    recordings: Sequence[RecordingMeta], test_fraction: float, seed: int
) -> SplitSpec:
    """Assign whole subjects to train or test, class by class.

    Within each class the subjects are shuffled with ``seed`` and added to the
    test side while that moves the class's test duration closer to
    ``test_fraction`` of its total. Every class keeps at least one subject on
    each side.

    Raises:
        SplitError: a class has fewer than two subjects.
    """
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")

    classes = _class_order(recordings)
    rng = np.random.default_rng(seed)
    assigned: set[str] = set()
    train: set[str] = set()
    test: set[str] = set()

    for diagnosis in classes:
        durations: dict[str, list[float]] = {}
        for r in recordings:
            if r.diagnosis == diagnosis and r.subject_id not in assigned:
                durations.setdefault(r.subject_id, []).append(r.duration_s)
        subjects = sorted(durations)
        if len(subjects) < 2:
            raise SplitError(
                diagnosis.value, f"needs at least 2 subjects for a split, found {len(subjects)}"
            )

        per_subject = {s: math.fsum(d) for s, d in durations.items()}
        target = test_fraction * math.fsum(per_subject.values())
        chosen: list[str] = []
        test_duration = 0.0
        for idx in rng.permutation(len(subjects)):
            if len(chosen) == len(subjects) - 1:
                break
            subject = subjects[idx]
            candidate = test_duration + per_subject[subject]
            if not chosen or abs(candidate - target) < abs(test_duration - target):
                chosen.append(subject)
                test_duration = candidate

        test.update(chosen)
        train.update(s for s in subjects if s not in chosen)
        assigned.update(subjects)
        log.debug("%s: %d test / %d train subjects", diagnosis.value, len(chosen),
                  len(subjects) - len(chosen))

    return SplitSpec(frozenset(train), frozenset(test), tuple(classes))


def apply_split(
    recordings: Sequence[RecordingMeta], split: SplitSpec
) -> tuple[list[RecordingMeta], list[RecordingMeta]]:
    """Partition recordings by the split's subject sets (order preserved)."""
    classes = set(split.classes)
    kept = [r for r in recordings if not classes or r.diagnosis in classes]
    train = [r for r in kept if r.subject_id in split.train_subjects]
    test = [r for r in kept if r.subject_id in split.test_subjects]
    return train, test


def save_split(split: SplitSpec, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(split.to_dict(), f, default_flow_style=False, sort_keys=True)
    return path


def load_split(path: Path | str) -> SplitSpec:
    with open(path) as f:
        return SplitSpec.from_dict(yaml.safe_load(f) or {})


# ---------------------------------------------------------------------------
# Public database layout
# ---------------------------------------------------------------------------


def convert_database(root: Path | str, out_path: Path | str) -> pd.DataFrame:
    """Build a manifest from the public respiratory sound database layout.

    Expects ``patient_diagnosis.csv`` (patient,diagnosis), ``demographic_info.txt``
    (patient age sex bmi weight height, space separated, NA for missing) and the
    recordings ``<patient>_<index>_<location>_<mode>_<device>.wav`` with their
    ``.txt`` annotations, either in ``audio_and_txt_files/`` or in ``root``.
    """
    root = Path(root)
    out_path = Path(out_path)
    diagnosis = pd.read_csv(
        root / "patient_diagnosis.csv", names=["patient", "diagnosis"], dtype=str
    )
    diagnosis_map = dict(zip(diagnosis["patient"].str.strip(), diagnosis["diagnosis"].str.strip()))

    demographics: dict[str, tuple[str, str]] = {}
    demo_path = root / "demographic_info.txt"
    if demo_path.exists():
        demo = pd.read_csv(
            demo_path,
            sep=r"\s+",
            header=None,
            names=["patient", "age", "sex", "bmi", "weight", "height"],
            dtype=str,
            keep_default_na=False,
        )
        demographics = {
            p: (a if not _is_missing(a) else "", s if not _is_missing(s) else "Unknown")
            for p, a, s in zip(demo["patient"], demo["age"], demo["sex"])
        }

    audio_dir = root / "audio_and_txt_files"
    if not audio_dir.is_dir():
        audio_dir = root

    base = out_path.parent.resolve()
    rows = []
    for wav in sorted(audio_dir.glob("*.wav")):
        parts = wav.stem.split("_")
        if len(parts) != 5:
            log.warning("Skipping %s: unexpected file name layout", wav.name)
            continue
        patient, device = parts[0], parts[4]
        if patient not in diagnosis_map:
            log.warning("Skipping %s: patient %s has no diagnosis", wav.name, patient)
            continue
        annotation = wav.with_suffix(".txt")
        age, sex = demographics.get(patient, ("", "Unknown"))
        rows.append(
            {
                "subject_id": patient,
                "diagnosis": diagnosis_map[patient],
                "device": DEVICE_ALIASES.get(device, device),
                "age_years": age,
                "sex": sex,
                "audio_path": os.path.relpath(wav.resolve(), base),
                "annotation_path": (
                    os.path.relpath(annotation.resolve(), base) if annotation.exists() else ""
                ),
            }
        )
    df = pd.DataFrame(rows, columns=MANIFEST_COLUMNS)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(out_path, sep="\t", index=False, lineterminator="\n")
    log.info("Wrote %d manifest rows to %s", len(df), out_path)
    return df
