"""Mini-batch training over audio frames."""

import logging
import math
from dataclasses import dataclass, fields
from typing import Any, Mapping, Sequence

import numpy as np
import pandas as pd

from .audio import AudioFrame, normalize_frame
from .config import Config
from .errors import ConfigError, DataError, NaNLossError, NonFiniteError, ShapeError
from .model import DEMOGRAPHICS_PORT, DemographicVector, ModelConfig, TrainedModel
from .nn import ModelGraph, make_optimizer, softmax_cross_entropy

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "lr", "train_loss", "train_accuracy", "val_loss", "val_accuracy"]


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 100
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    lr_schedule: str = "constant"
    lr_decay: float = 0.5
    lr_step_epochs: int = 30
    patience: int = 10
    validation_fraction: float = 0.1
    class_weights: bool = False
    normalize: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.epochs < 1 or self.patience < 1 or self.lr_step_epochs < 1:
            raise ConfigError("batch_size, epochs, patience and lr_step_epochs must be positive")
        if self.learning_rate < 0 or not math.isfinite(self.learning_rate):
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer '{self.optimizer}'")
        if self.lr_schedule not in ("constant", "step", "cosine"):
            raise ConfigError(f"unknown lr_schedule '{self.lr_schedule}'")
        if not 0 <= self.validation_fraction < 1:
            raise ConfigError("validation_fraction must be in [0, 1)")

    @classmethod
    def from_config(cls, config: Config, **overrides: Any) -> "TrainConfig":
        """Build from the ``train`` section; non-None overrides win."""
        names = {f.name for f in fields(cls)}
        values = {k: v for k, v in config.section("train").items() if k in names}
        values["seed"] = config.get("seed", 0)
        values["normalize"] = config.get("audio.normalize", True)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def lr_at(self, epoch: int) -> float:
        """Learning rate for a zero-based epoch."""
        if self.lr_schedule == "step":
            return self.learning_rate * self.lr_decay ** (epoch // self.lr_step_epochs)
        if self.lr_schedule == "cosine":
            return 0.5 * self.learning_rate * (1 + math.cos(math.pi * epoch / self.epochs))
        return self.learning_rate


@dataclass
class TrainResult:
    model: TrainedModel
    history: pd.DataFrame
    best_epoch: int
    stopped_early: bool
    validation_subjects: tuple[str, ...] = ()


def make_batch(
    frames: Sequence[AudioFrame],
    demos: Mapping[str, DemographicVector] | None,
    graph: ModelGraph,
    classes: Sequence[str],
    normalize: bool = True,
) -> tuple[np.ndarray, dict[str, np.ndarray], np.ndarray]:
    """Stack frames into ``(N, 1, L)`` input, auxiliary arrays and label indices."""
    length = graph.input_shape[-1]
    rows = []
    for f in frames:
        if f.length != length:
            raise ShapeError("input", f"frame from {f.source or f.subject_id} has {f.length} "
                             f"samples, model expects {length}")
        rows.append(normalize_frame(np.asarray(f.samples)) if normalize else f.samples)
    x = np.stack(rows).astype(graph.dtype)[:, None, :]

    labels = label_indices(frames, classes)

    aux: dict[str, np.ndarray] = {}
    if DEMOGRAPHICS_PORT in graph.aux_ports:
        missing = sorted({f.subject_id for f in frames if not demos or f.subject_id not in demos})
        if missing:
            raise DataError(f"no demographic entry for subjects {missing[:5]}")
        aux[DEMOGRAPHICS_PORT] = np.stack([demos[f.subject_id].as_array() for f in frames])
    return x, aux, labels


def label_indices(frames: Sequence[AudioFrame], classes: Sequence[str]) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    try:
        return np.array([index[f.label.value] for f in frames], dtype=np.int64)
    except KeyError as e:
        raise DataError(f"frame label {e.args[0]} is not one of the model classes") from None


def inverse_frequency_weights(labels: np.ndarray, n_classes: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=n_classes).astype(np.float64)
    weights = np.zeros(n_classes)
    present = counts > 0
    weights[present] = len(labels) / (present.sum() * counts[present])
    return weights


def _validation_split(
    frames: Sequence[AudioFrame], fraction: float, rng: np.random.Generator
) -> tuple[list[int], list[int], tuple[str, ...]]:
    subjects = sorted({f.subject_id for f in frames})
    if fraction == 0 or len(subjects) < 2:
        return list(range(len(frames))), [], ()
    n_val = min(max(1, int(round(fraction * len(subjects)))), len(subjects) - 1)
    held_out = set(rng.permutation(subjects)[:n_val].tolist())
    train_idx = [i for i, f in enumerate(frames) if f.subject_id not in held_out]
    val_idx = [i for i, f in enumerate(frames) if f.subject_id in held_out]
    return train_idx, val_idx, tuple(sorted(held_out))


def _score(graph, frames, demos, classes, cfg, weights) -> tuple[float, float]:
    total_loss, correct = 0.0, 0
    for start in range(0, len(frames), cfg.batch_size):
        batch = frames[start : start + cfg.batch_size]
        x, aux, y = make_batch(batch, demos, graph, classes, cfg.normalize)
        logits = graph.forward(x, aux, logits=True, cache=False)
        loss, _ = softmax_cross_entropy(logits, y, weights)
        total_loss += loss * len(batch)
        correct += int((logits.argmax(axis=1) == y).sum())
    return total_loss / len(frames), correct / len(frames)


def train(
    graph: ModelGraph,
    frames: Sequence[AudioFrame],
    demos: Mapping[str, DemographicVector] | None,
    cfg: TrainConfig,
    classes: Sequence[str] | None = None,
    model_config: ModelConfig | None = None,
) -> TrainResult:
    """Train ``graph`` in place with softmax cross-entropy.

    A subject-exclusive slice of ``validation_fraction`` of the subjects is
    held out for early stopping; the best epoch's weights are restored. With
    no validation slice the training loss is monitored instead.

    Raises:
        DataError: no frames, or a fusion graph lacks demographics for a subject.
        NaNLossError: the loss became non-finite.
    """
    if not frames:
        raise DataError("training needs at least one frame")
    classes = tuple(classes or (model_config.classes if model_config else ()))
    if not classes:
        raise ConfigError("class list is required")
    if graph.output_shape != (len(classes),):
        raise ShapeError("output", f"{graph.output_shape} does not match {len(classes)} classes")

    rng = np.random.default_rng(cfg.seed)
    if not graph.initialized:
        graph.initialize(cfg.seed)
    frames = list(frames)
    # Fail early on missing demographics or unknown labels
    make_batch(frames[:1], demos, graph, classes, cfg.normalize)
    if graph.aux_ports:
        missing = sorted({f.subject_id for f in frames} - set(demos or {}))
        if missing:
            raise DataError(f"no demographic entry for subjects {missing[:5]}")

    train_idx, val_idx, val_subjects = _validation_split(frames, cfg.validation_fraction, rng)
    train_frames = [frames[i] for i in train_idx]
    val_frames = [frames[i] for i in val_idx]
    labels = label_indices(train_frames, classes)
    weights = inverse_frequency_weights(labels, len(classes)) if cfg.class_weights else None

    optimizer = make_optimizer(cfg.optimizer, cfg.learning_rate)
    best_loss, best_epoch, best_params, wait = math.inf, 0, graph.snapshot(), 0
    history = []
    stopped_early = False

    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        order = rng.permutation(len(train_frames))
        total_loss, correct = 0.0, 0
        for batch_index, start in enumerate(range(0, len(order), cfg.batch_size)):
            batch = [train_frames[i] for i in order[start : start + cfg.batch_size]]
            x, aux, y = make_batch(batch, demos, graph, classes, cfg.normalize)
            try:
                logits = graph.forward(x, aux, logits=True)
            except NonFiniteError as e:
                raise NaNLossError(epoch, batch_index) from e
            loss, grad = softmax_cross_entropy(logits, y, weights)
            if not math.isfinite(loss):
                raise NaNLossError(epoch, batch_index)
            grads = graph.backward(grad)
            optimizer.step(graph.params, grads.params, lr)
            total_loss += loss * len(batch)
            correct += int((logits.argmax(axis=1) == y).sum())
        graph.clear_cache()

        row = {
            "epoch": epoch,
            "lr": lr,
            "train_loss": total_loss / len(train_frames),
            "train_accuracy": correct / len(train_frames),
            "val_loss": math.nan,
            "val_accuracy": math.nan,
        }
        if val_frames:
            row["val_loss"], row["val_accuracy"] = _score(
                graph, val_frames, demos, classes, cfg, weights
            )
        history.append(row)
        monitored = row["val_loss"] if val_frames else row["train_loss"]
        log.info("epoch %d: loss %.4f acc %.3f val %.4f", epoch, row["train_loss"],
                 row["train_accuracy"], row["val_loss"])

        if monitored < best_loss:
            best_loss, best_epoch, best_params, wait = monitored, epoch, graph.snapshot(), 0
        else:
            wait += 1
            if wait >= cfg.patience:
                stopped_early = True
                log.info("Early stop at epoch %d (best %d)", epoch, best_epoch)
                break

    graph.load_params(best_params)
    model = TrainedModel(
        graph=graph,
        classes=classes,
        config=model_config,
        metadata={"seed": cfg.seed, "best_epoch": best_epoch},
    )
    return TrainResult(
        model=model,
        history=pd.DataFrame(history, columns=HISTORY_COLUMNS),
        best_epoch=best_epoch,
        stopped_early=stopped_early,
        validation_subjects=val_subjects,
    )
