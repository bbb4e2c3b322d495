"""Waveform decoding, resampling and overlapping-frame extraction."""

import logging
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
import soundfile as sf

from .errors import (
    AudioError,
    ConfigError,
    DataError,
    FrameFileError,
    TruncatedAudioError,
    UnsupportedEncodingError,
)
from .ingest import Diagnosis, RecordingMeta

log = logging.getLogger(__name__)

# libsndfile subtypes decode_wav accepts
SUPPORTED_SUBTYPES = frozenset({"PCM_U8", "PCM_16", "PCM_24", "PCM_32", "FLOAT", "DOUBLE"})

FRAME_MAGIC = b"LSFR"
FRAME_VERSION = 1
_FRAME_HEADER = struct.Struct("<4sBBH")
_FRAME_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_FRAME_DTYPE_CODES = {v: k for k, v in _FRAME_DTYPES.items()}


@dataclass(frozen=True)
class WavInfo:
    """Header fields of a WAV file."""

    subtype: str
    channels: int
    sample_rate_hz: int
    n_frames: int

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono signal with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise DataError(f"waveform needs a non-empty 1-D sample array, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise DataError("waveform contains non-finite samples")
        if np.max(np.abs(samples)) > 1.0 + 1e-9:
            raise DataError("waveform amplitudes must lie in [-1, 1]")
        if int(self.sample_rate_hz) != self.sample_rate_hz or self.sample_rate_hz <= 0:
            raise DataError(f"sample rate must be a positive integer, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class AudioFrame:
    """Fixed-length slice of one recording."""

    samples: np.ndarray
    subject_id: str
    label: Diagnosis
    source_offset_s: float
    source: str = ""
    sample_rate_hz: int = 44100

    def __post_init__(self) -> None:
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise DataError(f"frame needs a non-empty 1-D sample array, got {self.samples.shape}")
        object.__setattr__(self, "label", Diagnosis(self.label))

    @property
    def length(self) -> int:
        return int(self.samples.size)


# ---------------------------------------------------------------------------
# WAV decoding
# ---------------------------------------------------------------------------


def _check_riff_length(path: Path) -> None:
    """Compare the RIFF chunk's declared length with the file size.

    libsndfile reads whatever part of a short data chunk is present, so a cut
    file only shows up here.
    """
    size = path.stat().st_size
    with open(path, "rb") as f:
        head = f.read(12)
    if len(head) < 12:
        raise TruncatedAudioError(f"{path}: file too short for a RIFF header")
    if head[:4] != b"RIFF" or head[8:12] != b"WAVE":
        raise UnsupportedEncodingError(f"{path}: not a RIFF/WAVE file")
    declared = int.from_bytes(head[4:8], "little")
    # 0 and 0xFFFFFFFF are written by streaming encoders that never patch the header
    if declared not in (0, 0xFFFFFFFF) and size < 8 + declared:
        raise TruncatedAudioError(
            f"{path}: RIFF header declares {8 + declared} bytes, only {size} present"
        )


def read_wav_info(path: Path | str) -> WavInfo:
    """Read only the header of a WAV file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Audio file not found at {path}")
    _check_riff_length(path)
    try:
        info = sf.info(str(path))
    except (RuntimeError, sf.SoundFileError) as e:
        raise UnsupportedEncodingError(f"{path}: {e}") from e
    if info.subtype not in SUPPORTED_SUBTYPES:
        raise UnsupportedEncodingError(f"{path}: {info.format} with {info.subtype} samples")
    return WavInfo(info.subtype, info.channels, info.samplerate, info.frames)


def decode_wav(path: Path | str) -> Waveform:
    """Decode a PCM or float WAV file to a mono waveform.

    Multi-channel input is averaged. Integer samples are scaled by 1/2^(bits-1);
    float samples are clipped to [-1, 1].

    Raises:
        TruncatedAudioError: the file is shorter than its RIFF header declares.
        UnsupportedEncodingError: anything other than 8/16/24/32-bit PCM or float.
        AudioError: the file holds no samples.
    """
    info = read_wav_info(path)
    if info.n_frames == 0:
        raise AudioError(f"{path}: file contains zero samples")
    try:
        x, _ = sf.read(str(path), dtype="float64", always_2d=True)
    except (RuntimeError, sf.SoundFileError) as e:
        raise AudioError(f"{path}: {e}") from e
    if x.shape[0] == 0:
        raise AudioError(f"{path}: file contains zero samples")
    return Waveform(np.clip(x.mean(axis=1), -1.0, 1.0), info.sample_rate_hz)


def write_wav(path: Path | str, samples: np.ndarray, sample_rate_hz: int) -> Path:
    """Write 16-bit PCM. ``samples`` is (n,) or (n, channels) in [-1, 1]."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    sf.write(str(path), x, int(sample_rate_hz), subtype="PCM_16", format="WAV")
    return path


# ---------------------------------------------------------------------------
# Signal operations
# ---------------------------------------------------------------------------


def resample(w: Waveform, target_hz: int) -> Waveform:
    """Linear-interpolation resample to ``target_hz``."""
    if target_hz <= 0:
        raise ConfigError(f"target sample rate must be positive, got {target_hz}")
    if target_hz == w.sample_rate_hz:
        return Waveform(w.samples.copy(), w.sample_rate_hz)
    n_in = w.samples.size
    n_out = max(1, int(math.floor(n_in * target_hz / w.sample_rate_hz + 0.5)))
    t_in = np.arange(n_in) / w.sample_rate_hz
    t_out = np.arange(n_out) / target_hz
    return Waveform(np.interp(t_out, t_in, w.samples), target_hz)


def normalize_frame(samples: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Scale to unit peak amplitude; all-zero input stays zero."""
    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    return samples / max(peak, eps)


class FrameCount(int):
    """Frame count carrying a flag for windows longer than the recording."""

    window_too_long: bool

    def __new__(cls, value: int, window_too_long: bool = False) -> "FrameCount":
        count = super().__new__(cls, value)
        count.window_too_long = window_too_long
        return count


def frame_count(duration_s: float, window_s: float, stride_s: float) -> FrameCount:
    """Number of windows of ``window_s`` stepped by ``stride_s``; the short tail is dropped.

    A window longer than the recording gives zero with ``window_too_long`` set.
    """
    if stride_s <= 0:
        raise ConfigError(f"stride must be positive, got {stride_s}")
    if window_s <= 0:
        raise ConfigError(f"window must be positive, got {window_s}")
    if window_s > duration_s + 1e-9:
        return FrameCount(0, window_too_long=True)
    return FrameCount(int(math.floor((duration_s - window_s) / stride_s + 1e-9)) + 1)


def extract_frames(
    w: Waveform, meta: RecordingMeta, window_s: float, stride_s: float
) -> list[AudioFrame]:
    """Cut ``w`` into overlapping frames; frame i starts at i * stride_s."""
    rate = w.sample_rate_hz
    length = int(round(window_s * rate))
    step = int(round(stride_s * rate))
    count = frame_count(w.duration_s, window_s, stride_s)
    n = 0
    if count and w.samples.size >= length:
        n = min(count, (w.samples.size - length) // max(step, 1) + 1)
    if n == 0:
        log.warning("%s: window %.3fs is longer than the recording (%.3fs), skipped",
                    meta.recording_id, window_s, w.duration_s)
        return []

    return [
        AudioFrame(
            samples=w.samples[i * step : i * step + length],
            subject_id=meta.subject_id,
            label=meta.diagnosis,
            source_offset_s=i * step / rate,
            source=meta.recording_id,
            sample_rate_hz=rate,
        )
        for i in range(n)
    ]


def frame_classes(frames: Iterable[AudioFrame]) -> tuple[str, ...]:
    """Labels present in ``frames``, in diagnosis order."""
    present = {f.label for f in frames}
    return tuple(d.value for d in Diagnosis if d in present)


def frames_for_recording(
    meta: RecordingMeta, sample_rate_hz: int, window_s: float, stride_s: float
) -> list[AudioFrame]:
    """Decode, resample to the canonical rate and frame one recording."""
    w = decode_wav(meta.audio_path)
    if w.sample_rate_hz != sample_rate_hz:
        w = resample(w, sample_rate_hz)
    return extract_frames(w, meta, window_s, stride_s)


def frames_for_recordings(
    recordings: Sequence[RecordingMeta],
    sample_rate_hz: int,
    window_s: float,
    stride_s: float,
    workers: int = 1,
) -> list[AudioFrame]:
    """Frame every recording; output is in manifest order regardless of ``workers``."""

    def job(meta: RecordingMeta) -> list[AudioFrame]:
        return frames_for_recording(meta, sample_rate_hz, window_s, stride_s)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_recording = list(pool.map(job, recordings))
    else:
        per_recording = [job(meta) for meta in recordings]

    frames = [f for chunk in per_recording for f in chunk]
    log.info("Extracted %d frames from %d recordings", len(frames), len(recordings))
    return frames


def window_sweep(
    recordings: Sequence[RecordingMeta],
    windows_s: Iterable[float] = range(1, 11),
    stride_s: float = 1.0,
) -> pd.DataFrame:
    """Frames per class for each candidate window length (from manifest durations)."""
    classes = [d.value for d in Diagnosis if any(r.diagnosis == d for r in recordings)]
    rows = []
    for window in windows_s:
        counts = dict.fromkeys(classes, 0)
        short = 0
        for r in recordings:
            n = frame_count(r.duration_s, window, stride_s)
            short += n.window_too_long
            counts[r.diagnosis.value] += n
        rows.append(
            {"window_s": float(window), **counts, "total": sum(counts.values()), "short": short}
        )
    return pd.DataFrame(rows, columns=["window_s", *classes, "total", "short"])


# ---------------------------------------------------------------------------
# Frame tensor files
# ---------------------------------------------------------------------------


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".tsv")


def save_frames(frames: Sequence[AudioFrame], path: Path | str, dtype: str = "float32") -> Path:
    """Write frames as a tensor file plus a ``.tsv`` metadata sidecar.

    Layout: magic ``LSFR``, u8 version, u8 dtype code (1 float32, 2 float64),
    u16 ndim, ndim x u64 dims, then little-endian row-major data.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np_dtype = np.dtype(dtype).newbyteorder("<")
    if np_dtype not in _FRAME_DTYPE_CODES:
        raise ConfigError(f"unsupported frame dtype {dtype}")

    lengths = {f.length for f in frames}
    if len(lengths) > 1:
        raise DataError(f"frames have mixed lengths {sorted(lengths)}")
    length = lengths.pop() if lengths else 0
    data = (
        np.stack([f.samples for f in frames]).astype(np_dtype)
        if frames
        else np.zeros((0, length), dtype=np_dtype)
    )

    with open(path, "wb") as f:
        f.write(_FRAME_HEADER.pack(FRAME_MAGIC, FRAME_VERSION, _FRAME_DTYPE_CODES[np_dtype], 2))
        f.write(struct.pack("<2Q", *data.shape))
        f.write(np.ascontiguousarray(data).tobytes())

    pd.DataFrame(
        {
            "subject_id": [f.subject_id for f in frames],
            "label": [f.label.value for f in frames],
            "source": [f.source for f in frames],
            "source_offset_s": [repr(float(f.source_offset_s)) for f in frames],
            "sample_rate_hz": [f.sample_rate_hz for f in frames],
        },
        columns=["subject_id", "label", "source", "source_offset_s", "sample_rate_hz"],
    ).to_csv(_sidecar(path), sep="\t", index=False, lineterminator="\n")
    log.info("Wrote %d frames to %s", len(frames), path)
    return path


def load_frames(path: Path | str) -> list[AudioFrame]:
    """Load frames written by ``save_frames``; samples are read-only memory maps."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Frame file not found at {path}")
    size = path.stat().st_size
    with open(path, "rb") as f:
        head = f.read(_FRAME_HEADER.size)
        if len(head) < _FRAME_HEADER.size:
            raise FrameFileError(f"{path}: truncated header")
        magic, version, code, ndim = _FRAME_HEADER.unpack(head)
        if magic != FRAME_MAGIC:
            raise FrameFileError(f"{path}: bad magic {magic!r}")
        if version != FRAME_VERSION:
            raise FrameFileError(f"{path}: unsupported version {version}")
        if code not in _FRAME_DTYPES or ndim != 2:
            raise FrameFileError(f"{path}: dtype code {code}, ndim {ndim}")
        dims = f.read(8 * ndim)
        if len(dims) < 8 * ndim:
            raise FrameFileError(f"{path}: truncated shape")
        shape = struct.unpack(f"<{ndim}Q", dims)

    dtype = _FRAME_DTYPES[code]
    offset = _FRAME_HEADER.size + 8 * ndim
    expected = offset + int(np.prod(shape)) * dtype.itemsize
    if size != expected:
        raise FrameFileError(f"{path}: expected {expected} bytes, found {size}")

    meta = pd.read_csv(_sidecar(path), sep="\t", dtype=str, keep_default_na=False)
    if len(meta) != shape[0]:
        raise FrameFileError(f"{path}: {shape[0]} frames but {len(meta)} sidecar rows")
    if shape[0] == 0:
        return []

    data = np.memmap(path, dtype=dtype, mode="r", offset=offset, shape=shape)
    return [
        AudioFrame(
            samples=data[i],
            subject_id=rec["subject_id"],
            label=Diagnosis(rec["label"]),
            source_offset_s=float(rec["source_offset_s"]),
            source=rec["source"],
            sample_rate_hz=int(rec["sample_rate_hz"]),
        )
        for i, rec in enumerate(meta.to_dict(orient="records"))
    ]
