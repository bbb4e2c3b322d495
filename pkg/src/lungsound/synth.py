"""Synthetic fixtures.

* a respiratory database laid out like the selected subset of the public
  database (per-class subjects, 20 s recordings and cycle counts), plus
  distractor rows from other devices and dropped classes;
* a tone-versus-noise frame task;
* a task whose label depends jointly on the audio and on the age group.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioFrame, write_wav
from .ingest import (
    CycleAnnotation,
    Device,
    Diagnosis,
    RecordingMeta,
    Sex,
    SplitSpec,
    save_split,
    write_manifest,
)
from .model import DemographicVector, encode_demographics

log = logging.getLogger(__name__)

RECORDING_S = 20.0

# class: (subjects, recordings, annotated cycles)
TRAIN_COUNTS = {
    Diagnosis.URTI: (12, 19, 207),
    Diagnosis.HEALTHY: (24, 28, 257),
    Diagnosis.COPD: (6, 29, 406),
    Diagnosis.BRONCHIECTASIS: (5, 13, 88),
    Diagnosis.BRONCHIOLITIS: (5, 11, 141),
}
TEST_COUNTS = {
    Diagnosis.URTI: (2, 4, 26),
    Diagnosis.HEALTHY: (4, 7, 48),
    Diagnosis.COPD: (2, 7, 119),
    Diagnosis.BRONCHIECTASIS: (2, 3, 17),
    Diagnosis.BRONCHIOLITIS: (1, 2, 16),
}

# Rows the Meditron/retained-class selection must drop
DISTRACTORS = [
    (Diagnosis.ASTHMA, Device.LITTMANN_CLASSIC),
    (Diagnosis.COPD, Device.LITTMANN_3200),
    (Diagnosis.PNEUMONIA, Device.MEDITRON),
    (Diagnosis.LRTI, Device.MEDITRON),
]

AGE_RANGES = {
    Diagnosis.URTI: (2.0, 70.0),
    Diagnosis.HEALTHY: (1.0, 16.0),
    Diagnosis.COPD: (55.0, 90.0),
    Diagnosis.BRONCHIECTASIS: (30.0, 75.0),
    Diagnosis.BRONCHIOLITIS: (0.2, 3.0),
    Diagnosis.ASTHMA: (20.0, 70.0),
    Diagnosis.LRTI: (1.0, 70.0),
    Diagnosis.PNEUMONIA: (50.0, 85.0),
}

TONE_LABEL = Diagnosis.HEALTHY.value
NOISE_LABEL = Diagnosis.COPD.value
TASK_CLASSES = (TONE_LABEL, NOISE_LABEL)


@dataclass(frozen=True)
class FixturePaths:
    root: Path
    manifest: Path
    train_manifest: Path
    test_manifest: Path
    split: Path


def _even_cycles(count: int, duration_s: float) -> list[CycleAnnotation]:
    edges = np.linspace(0.0, duration_s, count + 1)
    return [
        CycleAnnotation(float(a), float(b), crackles=i % 3 == 0, wheezes=i % 5 == 0)
        for i, (a, b) in enumerate(zip(edges[:-1], edges[1:]))
    ]


def _spread(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (i < extra) for i in range(parts)]


def _breath(rng: np.random.Generator, n: int, rate: int, diagnosis: Diagnosis) -> np.ndarray:
    t = np.arange(n) / rate
    breathing = 0.4 * np.sin(2 * np.pi * 0.25 * t) * np.sin(2 * np.pi * (10 + diagnosis.order) * t)
    return np.clip(breathing + 0.05 * rng.standard_normal(n), -1.0, 1.0)


def write_database_fixture(
    root: Path | str, sample_rate_hz: int = 200, seed: int = 0
) -> FixturePaths:
    """Write WAVs, annotations, manifests and the published split under ``root``.

    ``manifest.tsv`` lists every recording (distractors included);
    ``train.tsv`` and ``test.tsv`` list the selected split, whose per-class
    subject, recording, duration and cycle counts follow TRAIN_COUNTS and
    TEST_COUNTS.
    """
    root = Path(root)
    audio_dir = root / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_samples = int(round(RECORDING_S * sample_rate_hz))

    next_subject = 101
    train: list[RecordingMeta] = []
    test: list[RecordingMeta] = []
    distractors: list[RecordingMeta] = []

    def add_subjects(diagnosis: Diagnosis, device: Device, counts: tuple[int, int, int],
                     bucket: list[RecordingMeta]) -> list[str]:
        nonlocal next_subject
        n_subjects, n_recordings, n_cycles = counts
        subjects = [str(next_subject + i) for i in range(n_subjects)]
        next_subject += n_subjects
        low, high = AGE_RANGES[diagnosis]
        ages = {s: round(float(rng.uniform(low, high)), 1) for s in subjects}
        for k, cycles in enumerate(_spread(n_cycles, n_recordings)):
            subject = subjects[k % n_subjects]
            stem = f"{subject}_{k + 1}b1_Tc_mc_{device.value}"
            wav = write_wav(audio_dir / f"{stem}.wav", _breath(rng, n_samples, sample_rate_hz,
                                                               diagnosis), sample_rate_hz)
            annotation = None
            annotations = _even_cycles(cycles, RECORDING_S)
            if annotations:
                annotation = audio_dir / f"{stem}.txt"
                annotation.write_text(
                    "".join(f"{c.start_s:.3f}\t{c.end_s:.3f}\t{int(c.crackles)}\t{int(c.wheezes)}\n"
                            for c in annotations)
                )
            bucket.append(
                RecordingMeta(
                    subject_id=subject,
                    diagnosis=diagnosis,
                    device=device,
                    age_years=ages[subject],
                    sex=Sex.M if int(subject) % 2 else Sex.F,
                    audio_path=wav,
                    duration_s=RECORDING_S,
                    cycles=tuple(annotations),
                    annotation_path=annotation,
                )
            )
        return subjects

    train_subjects: list[str] = []
    test_subjects: list[str] = []
    for diagnosis in TRAIN_COUNTS:
        train_subjects += add_subjects(diagnosis, Device.MEDITRON, TRAIN_COUNTS[diagnosis], train)
        test_subjects += add_subjects(diagnosis, Device.MEDITRON, TEST_COUNTS[diagnosis], test)
    for diagnosis, device in DISTRACTORS:
        add_subjects(diagnosis, device, (1, 2, 20), distractors)

    paths = FixturePaths(
        root=root,
        manifest=write_manifest(train + test + distractors, root / "manifest.tsv"),
        train_manifest=write_manifest(train, root / "train.tsv"),
        test_manifest=write_manifest(test, root / "test.tsv"),
        split=save_split(
            SplitSpec(frozenset(train_subjects), frozenset(test_subjects), tuple(TRAIN_COUNTS)),
            root / "split.yaml",
        ),
    )
    log.info("Wrote database fixture with %d recordings to %s",
             len(train) + len(test) + len(distractors), root)
    return paths


def _tone(rng: np.random.Generator, n: int, rate: int) -> np.ndarray:
    t = np.arange(n) / rate
    freq = rng.uniform(0.05, 0.09) * rate
    amplitude = rng.uniform(0.5, 0.9)
    signal = amplitude * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    return np.clip(signal + 0.01 * rng.standard_normal(n), -1.0, 1.0)


def _noise(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.clip(rng.uniform(0.1, 0.3) * rng.standard_normal(n), -1.0, 1.0)


def _frame(samples: np.ndarray, subject: str, label: str, rate: int) -> AudioFrame:
    return AudioFrame(samples, subject, Diagnosis(label), 0.0, source=subject, sample_rate_hz=rate)


def tone_noise_frames(
    n_train: int = 200,
    n_test: int = 50,
    sample_rate_hz: int = 8000,
    window_s: float = 1.0,
    seed: int = 0,
) -> tuple[list[AudioFrame], list[AudioFrame]]:
    """Balanced two-class frames: a narrow-band tone (Healthy) or broadband noise (COPD)."""
    rng = np.random.default_rng(seed)
    n = int(round(window_s * sample_rate_hz))
    frames = []
    for i in range(n_train + n_test):
        is_tone = i % 2 == 0
        samples = _tone(rng, n, sample_rate_hz) if is_tone else _noise(rng, n)
        frames.append(_frame(samples, f"s{i:04d}", TONE_LABEL if is_tone else NOISE_LABEL,
                             sample_rate_hz))
    return frames[:n_train], frames[n_train:]


def joint_age_frames(
    n_train: int = 240,
    n_test: int = 80,
    sample_rate_hz: int = 2000,
    window_s: float = 1.0,
    seed: int = 0,
) -> tuple[list[AudioFrame], list[AudioFrame], dict[str, DemographicVector]]:
    """Frames labelled COPD only when the audio is noise AND the subject is old.

    Tone and noise, young (25) and old (75) are independent and equally likely,
    so audio alone can reach at most 75% accuracy.
    """
    rng = np.random.default_rng(seed)
    n = int(round(window_s * sample_rate_hz))
    frames = []
    demos: dict[str, DemographicVector] = {}
    for i in range(n_train + n_test):
        is_tone = bool(rng.integers(2))
        is_old = bool(rng.integers(2))
        subject = f"j{i:04d}"
        samples = _tone(rng, n, sample_rate_hz) if is_tone else _noise(rng, n)
        label = NOISE_LABEL if (not is_tone and is_old) else TONE_LABEL
        frames.append(_frame(samples, subject, label, sample_rate_hz))
        demos[subject] = encode_demographics(75.0 if is_old else 25.0, Sex.UNKNOWN)
    return frames[:n_train], frames[n_train:], demos
