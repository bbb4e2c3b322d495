"""EnvNet-style classifier builders and demographic encoding."""

import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np
import yaml

from .config import N_AGE_GROUPS, RETAINED_CLASSES
from .errors import ConfigError, DataError, ModelFileError, ShapeError
from .ingest import RecordingMeta, Sex, age_group
from .nn import CostReport, LayerSpec, ModelGraph, count_cost, load_model, save_model

log = logging.getLogger(__name__)

DEMOGRAPHICS_PORT = "demographics"


@dataclass(frozen=True)
class DemographicFeatures:
    """Which demographic blocks feed the fusion port."""

    age_group: bool = True
    gender: bool = False

    @property
    def width(self) -> int:
        return N_AGE_GROUPS * self.age_group + 2 * self.gender


@dataclass(frozen=True, eq=False)
class DemographicVector:
    age_group_onehot: np.ndarray
    gender_onehot: np.ndarray
    enabled: DemographicFeatures = field(default_factory=DemographicFeatures)

    def __post_init__(self) -> None:
        for name, block in (("age", self.age_group_onehot), ("gender", self.gender_onehot)):
            if np.count_nonzero(block) > 1:
                raise DataError(f"{name} one-hot block has more than one entry set")

    def as_array(self) -> np.ndarray:
        parts = []
        if self.enabled.age_group:
            parts.append(self.age_group_onehot)
        if self.enabled.gender:
            parts.append(self.gender_onehot)
        return np.concatenate(parts) if parts else np.zeros(0)


def encode_demographics(
    age_years: float | None,
    sex: Sex | str | None = None,
    enabled: DemographicFeatures = DemographicFeatures(),
) -> DemographicVector:
    """One-hot age group (``min(floor(age/10), 9)``) and gender (M, F); unknowns stay zero."""
    age_block = np.zeros(N_AGE_GROUPS)
    if age_years is not None:
        if age_years < 0:
            raise DataError(f"negative age {age_years}")
        age_block[age_group(age_years)] = 1.0

    gender_block = np.zeros(2)
    sex = Sex.parse(sex) if isinstance(sex, str) else sex
    if sex == Sex.M:
        gender_block[0] = 1.0
    elif sex == Sex.F:
        gender_block[1] = 1.0
    return DemographicVector(age_block, gender_block, enabled)


def demographics_for(
    recordings: Iterable[RecordingMeta], enabled: DemographicFeatures = DemographicFeatures()
) -> dict[str, DemographicVector]:
    """Subject id to demographic vector, from each subject's first recording."""
    table: dict[str, DemographicVector] = {}
    for r in recordings:
        if r.subject_id not in table:
            table[r.subject_id] = encode_demographics(r.age_years, r.sex, enabled)
    return table


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of the raw-waveform classifier.

    The trunk is Conv1D blocks, one non-overlapping MaxPool1D, a reshape of
    (channels, time) into a one-channel image, Conv2D+MaxPool2D blocks and a
    dense head of ReLU layers ending in Softmax. With ``fusion`` on, the
    demographic port is concatenated to the flattened trunk output.
    """

    name: str = "audio_only"
    window_s: float = 5.0
    sample_rate_hz: int = 44100
    classes: tuple[str, ...] = tuple(RETAINED_CLASSES)
    conv1d_channels: tuple[int, ...] = (32, 32)
    conv1d_kernels: tuple[int, ...] = (64, 8)
    conv1d_strides: tuple[int, ...] = (16, 2)
    pool1d: int = 32
    conv2d_channels: tuple[int, ...] = (16, 16)
    conv2d_kernel: int = 3
    pool2d: int = 2
    dense_units: tuple[int, ...] = (64, 64)
    fusion: bool = False
    demographics: DemographicFeatures = field(default_factory=DemographicFeatures)
    dtype: str = "float32"

    def __post_init__(self) -> None:
        for name in ("conv1d_channels", "conv1d_kernels", "conv1d_strides", "conv2d_channels",
                     "dense_units", "classes"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if isinstance(self.demographics, Mapping):
            object.__setattr__(self, "demographics", DemographicFeatures(**self.demographics))

        if self.window_s <= 0 or self.sample_rate_hz <= 0:
            raise ConfigError("window_s and sample_rate_hz must be positive")
        if len(self.classes) < 2:
            raise ConfigError("a classifier needs at least two classes")
        if not (len(self.conv1d_channels) == len(self.conv1d_kernels) == len(self.conv1d_strides)):
            raise ConfigError("conv1d_channels, conv1d_kernels and conv1d_strides differ in length")
        if not self.conv1d_channels:
            raise ConfigError("at least one Conv1D layer is required")
        numbers = (*self.conv1d_channels, *self.conv1d_kernels, *self.conv1d_strides,
                   *self.conv2d_channels, *self.dense_units, self.pool1d, self.conv2d_kernel,
                   self.pool2d)
        if any(int(v) != v or v < 1 for v in numbers):
            raise ConfigError("layer hyperparameters must be positive integers")
        if self.fusion and self.demographics.width == 0:
            raise ConfigError("fusion needs at least one demographic feature")

    @property
    def input_length(self) -> int:
        return int(round(self.window_s * self.sample_rate_hz))

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**dict(data))

    def save(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, default_flow_style=False, sort_keys=False)
        return path


def load_model_config(path: Path | str) -> ModelConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model config not found at {path}")
    with open(path) as f:
        return ModelConfig.from_dict(yaml.safe_load(f) or {})


def _trunk(cfg: ModelConfig) -> list[LayerSpec]:
    layers = []
    for channels, kernel, stride in zip(cfg.conv1d_channels, cfg.conv1d_kernels,
                                        cfg.conv1d_strides):
        layers.append(LayerSpec("Conv1D", {"out_channels": channels, "kernel_size": kernel,
                                           "stride": stride}))
        layers.append(LayerSpec("ReLU"))
    layers.append(LayerSpec("MaxPool1D", {"pool_size": cfg.pool1d}))
    return layers


def _image_and_head(cfg: ModelConfig, pooled_shape: tuple[int, ...]) -> list[LayerSpec]:
    layers = [LayerSpec("Reshape", {"shape": [1, *pooled_shape]})]
    for channels in cfg.conv2d_channels:
        layers.append(LayerSpec("Conv2D", {"out_channels": channels,
                                           "kernel_size": cfg.conv2d_kernel}))
        layers.append(LayerSpec("ReLU"))
        layers.append(LayerSpec("MaxPool2D", {"pool_size": cfg.pool2d}))
    layers.append(LayerSpec("Flatten"))
    if cfg.fusion:
        layers.append(LayerSpec("Concat", {"port": DEMOGRAPHICS_PORT}))
    for units in cfg.dense_units:
        layers.append(LayerSpec("Dense", {"units": units}))
        layers.append(LayerSpec("ReLU"))
    layers.append(LayerSpec("Dense", {"units": cfg.n_classes}))
    layers.append(LayerSpec("Softmax"))
    return layers


def _build(cfg: ModelConfig) -> ModelGraph:
    input_shape = (1, cfg.input_length)
    trunk = _trunk(cfg)
    # Resolve the pooled (channels, time) shape so the reshape target is exact
    pooled = ModelGraph(input_shape, trunk, dtype=cfg.dtype).output_shape
    aux = {DEMOGRAPHICS_PORT: cfg.demographics.width} if cfg.fusion else {}
    graph = ModelGraph(input_shape, trunk + _image_and_head(cfg, pooled), aux, cfg.dtype)
    log.debug("Built %s: %d layers, %d parameters", cfg.name, len(graph.layers), graph.n_params)
    return graph


def build_audio_model(cfg: ModelConfig) -> ModelGraph:
    """Raw-waveform classifier without demographic input.

    Raises:
        ShapeError: the configuration shrinks an intermediate length below one.
    """
    if cfg.fusion:
        raise ConfigError("build_audio_model needs a config with fusion off")
    return _build(cfg)


def build_fusion_model(cfg: ModelConfig) -> ModelGraph:
    """Audio trunk plus the demographic port concatenated after Flatten."""
    if not cfg.fusion:
        raise ConfigError("build_fusion_model needs a config with fusion on")
    return _build(cfg)


def build_model(cfg: ModelConfig) -> ModelGraph:
    return build_fusion_model(cfg) if cfg.fusion else build_audio_model(cfg)


@dataclass
class TrainedModel:
    """Graph with parameters plus the labels and config it was trained for."""

    graph: ModelGraph
    classes: tuple[str, ...]
    config: ModelConfig | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def fusion(self) -> bool:
        return bool(self.graph.aux_ports)

    @property
    def demographics(self) -> DemographicFeatures:
        return self.config.demographics if self.config else DemographicFeatures()

    def cost(self) -> CostReport:
        return count_cost(self.graph)

    def save(self, path: Path | str) -> Path:
        meta = {
            "classes": list(self.classes),
            "model_config": self.config.to_dict() if self.config else None,
            **self.metadata,
        }
        return save_model(self.graph, path, meta)

    @classmethod
    def load(cls, path: Path | str, expect: ModelGraph | None = None) -> "TrainedModel":
        graph, meta = load_model(path, expect)
        meta = dict(meta)
        if "classes" not in meta:
            raise ModelFileError(f"{path}: model metadata has no class list")
        classes = tuple(meta.pop("classes"))
        cfg_data = meta.pop("model_config", None)
        config = ModelConfig.from_dict(cfg_data) if cfg_data else None
        if graph.output_shape != (len(classes),):
            raise ShapeError("output", f"{graph.output_shape} does not match {len(classes)} classes")
        return cls(graph, classes, config, meta)
