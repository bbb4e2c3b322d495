"""Shared fixtures for lungsound tests."""

from pathlib import Path

import numpy as np
import pytest

from lungsound.config import reset_config
from lungsound.ingest import CycleAnnotation, Device, Diagnosis, RecordingMeta, Sex
from lungsound.model import ModelConfig
from lungsound.nn import LayerSpec, ModelGraph
from lungsound.synth import write_database_fixture

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Point the config at an empty location so user settings never leak in."""
    monkeypatch.setenv("LUNGSOUND_CONFIG", str(tmp_path / "no-config.yaml"))
    reset_config()
    yield
    reset_config()


@pytest.fixture(scope="session")
def database(tmp_path_factory):
    """Synthetic database fixture at 200 Hz (written once per session)."""
    return write_database_fixture(tmp_path_factory.mktemp("database"), sample_rate_hz=200, seed=0)


@pytest.fixture
def make_recording(tmp_path):
    """Factory for RecordingMeta rows pointing at a dummy audio path."""

    def make(
        subject="101",
        diagnosis=Diagnosis.COPD,
        device=Device.MEDITRON,
        duration_s=20.0,
        age=70.0,
        sex=Sex.M,
        cycles=(),
        name=None,
    ):
        audio = tmp_path / (name or f"{subject}_{diagnosis.value}_{len(list(tmp_path.iterdir()))}.wav")
        audio.touch()
        return RecordingMeta(
            subject_id=subject,
            diagnosis=diagnosis,
            device=device,
            age_years=age,
            sex=sex,
            audio_path=audio,
            duration_s=duration_s,
            cycles=tuple(cycles),
        )

    return make


@pytest.fixture
def cycle():
    return CycleAnnotation(0.0, 2.5, crackles=False, wheezes=True)


@pytest.fixture
def tiny_config():
    """Five-class model for 5 s frames at 200 Hz (input length 1000)."""
    return ModelConfig(
        name="tiny",
        window_s=5.0,
        sample_rate_hz=200,
        conv1d_channels=(4, 4),
        conv1d_kernels=(8, 4),
        conv1d_strides=(2, 2),
        pool1d=8,
        conv2d_channels=(4,),
        conv2d_kernel=3,
        pool2d=2,
        dense_units=(8,),
    )


@pytest.fixture
def dense_graph():
    """Dense(3) -> ReLU -> Dense(2) -> Softmax over 4 inputs, float64."""
    graph = ModelGraph(
        (4,),
        [
            LayerSpec("Dense", {"units": 3}),
            LayerSpec("ReLU"),
            LayerSpec("Dense", {"units": 2}),
            LayerSpec("Softmax"),
        ],
        dtype="float64",
    )
    return graph.initialize(seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
