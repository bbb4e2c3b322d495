"""Confusion matrices, per-class sensitivity and accuracy."""

import json
import logging
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np
import pandas as pd

from .audio import AudioFrame
from .errors import DataError
from .model import DemographicVector, TrainedModel
from .nn import CostReport
from .training import label_indices, make_batch

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Rows of ``confusion`` are the true class, columns the prediction."""

    classes: tuple[str, ...]
    confusion: np.ndarray
    per_class_sensitivity: np.ndarray
    accuracy: float
    undefined_classes: tuple[str, ...] = ()
    level: str = "frame"
    subject: "EvalReport | None" = None

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    def to_dict(self) -> dict[str, Any]:
        data = {
            "level": self.level,
            "classes": list(self.classes),
            "confusion": self.confusion.astype(int).tolist(),
            "per_class_sensitivity": {
                c: (None if np.isnan(s) else float(s))
                for c, s in zip(self.classes, self.per_class_sensitivity)
            },
            "accuracy": self.accuracy,
            "undefined_classes": list(self.undefined_classes),
            "total": self.total,
        }
        if self.subject is not None:
            data["subject"] = self.subject.to_dict()
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def confusion_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            self.confusion,
            index=pd.Index(self.classes, name="truth"),
            columns=pd.Index(self.classes, name="predicted"),
        )


def report_from_confusion(
    confusion: Any, classes: Sequence[str] | None = None, level: str = "frame"
) -> EvalReport:
    """Sensitivity is ``confusion[c, c] / row_sum(c)``; NaN (flagged) for empty rows."""
    confusion = np.asarray(confusion, dtype=np.int64)
    if confusion.ndim != 2 or confusion.shape[0] != confusion.shape[1]:
        raise DataError(f"confusion matrix must be square, got {confusion.shape}")
    if (confusion < 0).any():
        raise DataError("confusion matrix has negative entries")
    n = confusion.shape[0]
    classes = tuple(classes) if classes is not None else tuple(str(i) for i in range(n))
    if len(classes) != n:
        raise DataError(f"{len(classes)} class names for a {n}x{n} confusion matrix")

    rows = confusion.sum(axis=1)
    diag = np.diag(confusion).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        sensitivity = np.where(rows > 0, diag / np.where(rows > 0, rows, 1), np.nan)
    undefined = tuple(c for c, r in zip(classes, rows) if r == 0)
    if undefined:
        log.warning("No %s-level examples for %s; sensitivity undefined", level, list(undefined))
    total = confusion.sum()
    accuracy = float(np.trace(confusion) / total) if total else float("nan")
    return EvalReport(classes, confusion, sensitivity, accuracy, undefined, level)


def report_from_predictions(
    y_true: Sequence[int], y_pred: Sequence[int], classes: Sequence[str], level: str = "frame"
) -> EvalReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    n = len(classes)
    if y_true.shape != y_pred.shape:
        raise DataError("truth and prediction lengths differ")
    confusion = np.zeros((n, n), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)
    return report_from_confusion(confusion, classes, level)


def majority_vote(labels: Sequence[int], n_classes: int) -> int:
    """Most frequent label; ties go to the lowest class index."""
    return int(np.argmax(np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes)))


def predict(
    model: TrainedModel,
    frames: Sequence[AudioFrame],
    demos: Mapping[str, DemographicVector] | None = None,
    batch_size: int = 64,
    normalize: bool = True,
) -> np.ndarray:
    """Class probabilities, one row per frame."""
    out = []
    for start in range(0, len(frames), batch_size):
        batch = frames[start : start + batch_size]
        x, aux, _ = make_batch(batch, demos, model.graph, model.classes, normalize)
        out.append(model.graph.forward(x, aux, cache=False))
    return np.concatenate(out) if out else np.zeros((0, len(model.classes)))


def evaluate(
    model: TrainedModel,
    frames: Sequence[AudioFrame],
    demos: Mapping[str, DemographicVector] | None = None,
    batch_size: int = 64,
    normalize: bool = True,
) -> EvalReport:
    """Frame-level report with a subject-level (majority vote) report attached."""
    if not frames:
        raise DataError("evaluation needs at least one frame")
    classes = tuple(model.classes)
    truth = label_indices(frames, classes)
    predicted = predict(model, frames, demos, batch_size, normalize).argmax(axis=1)
    frame_report = report_from_predictions(truth, predicted, classes, "frame")

    by_subject: dict[str, tuple[list[int], list[int]]] = {}
    for f, t, p in zip(frames, truth, predicted):
        entry = by_subject.setdefault(f.subject_id, ([], []))
        entry[0].append(int(t))
        entry[1].append(int(p))
    subject_truth = [majority_vote(t, len(classes)) for t, _ in by_subject.values()]
    subject_pred = [majority_vote(p, len(classes)) for _, p in by_subject.values()]
    subject_report = report_from_predictions(subject_truth, subject_pred, classes, "subject")

    return EvalReport(
        classes=frame_report.classes,
        confusion=frame_report.confusion,
        per_class_sensitivity=frame_report.per_class_sensitivity,
        accuracy=frame_report.accuracy,
        undefined_classes=frame_report.undefined_classes,
        level="frame",
        subject=subject_report,
    )


def comparison_table(rows: Sequence[tuple[str, EvalReport, CostReport | None]]) -> pd.DataFrame:
    """Side-by-side model comparison: size, FLOPs, per-class sensitivity and accuracy (%)."""
    records = []
    for name, report, cost in rows:
        record: dict[str, Any] = {
            "Model": name,
            "#params": cost.total_params if cost else None,
            "FLOPs": cost.total_flops if cost else None,
        }
        for c, s in zip(report.classes, report.per_class_sensitivity):
            record[c] = None if np.isnan(s) else round(100 * float(s), 1)
        record["Accuracy"] = round(100 * report.accuracy, 1)
        records.append(record)
    return pd.DataFrame(records)
