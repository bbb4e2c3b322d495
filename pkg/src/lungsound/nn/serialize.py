"""Model file format.

Layout (all integers little-endian)::

    8 bytes   magic b"LSMODEL\\0"
    u16       format version
    u32       header length H
    H bytes   UTF-8 JSON header (sorted keys): graph description,
              parameter manifest (layer, name, shape, dtype, offset, nbytes)
              and free-form metadata
    ...       parameter blobs, row-major, in manifest order
    32 bytes  SHA-256 of everything above
"""

import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..errors import ChecksumError, ModelFileError, ShapeError, VersionError
from .graph import ModelGraph

log = logging.getLogger(__name__)

MODEL_MAGIC = b"LSMODEL\x00"
MODEL_VERSION = 1
_PREAMBLE = struct.Struct("<8sHI")
_DIGEST_SIZE = 32


def save_model(
    graph: ModelGraph, path: Path | str, metadata: Mapping[str, Any] | None = None
) -> Path:
    """Write ``graph`` with its parameters; output bytes depend only on the inputs."""
    if not graph.initialized:
        raise ModelFileError("cannot save a graph without parameters")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    manifest = []
    blobs = []
    offset = 0
    for i, name, value in graph.parameter_items():
        blob = np.ascontiguousarray(value, dtype=value.dtype.newbyteorder("<")).tobytes()
        manifest.append(
            {
                "layer": i,
                "name": name,
                "shape": list(value.shape),
                "dtype": value.dtype.newbyteorder("<").str,
                "offset": offset,
                "nbytes": len(blob),
            }
        )
        blobs.append(blob)
        offset += len(blob)

    header = json.dumps(
        {"graph": graph.describe(), "params": manifest, "metadata": dict(metadata or {})},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    body = _PREAMBLE.pack(MODEL_MAGIC, MODEL_VERSION, len(header)) + header + b"".join(blobs)
    path.write_bytes(body + hashlib.sha256(body).digest())
    log.info("Saved model (%d parameter tensors) to %s", len(manifest), path)
    return path


def load_model(
    path: Path | str, expect: ModelGraph | Mapping[str, Any] | None = None
) -> tuple[ModelGraph, dict[str, Any]]:
    """Read a model file.

    Args:
        path: File written by ``save_model``.
        expect: Graph (or graph description) the file must match.

    Returns:
        (graph with parameters, metadata)

    Raises:
        ChecksumError: contents do not match the trailing digest.
        VersionError: unknown format version, or graph differs from ``expect``.
        ShapeError: a parameter blob does not fit its layer.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model file not found at {path}")
    data = path.read_bytes()
    if len(data) < _PREAMBLE.size + _DIGEST_SIZE:
        raise ModelFileError(f"{path}: file too short")
    body, digest = data[:-_DIGEST_SIZE], data[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumError(f"{path}: checksum mismatch")

    magic, version, header_len = _PREAMBLE.unpack(body[: _PREAMBLE.size])
    if magic != MODEL_MAGIC:
        raise ModelFileError(f"{path}: not a model file")
    if version != MODEL_VERSION:
        raise VersionError(f"{path}: format version {version}, expected {MODEL_VERSION}")
    start = _PREAMBLE.size + header_len
    try:
        header = json.loads(body[_PREAMBLE.size : start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFileError(f"{path}: unreadable header ({e})") from e

    if expect is not None:
        wanted = expect.describe() if isinstance(expect, ModelGraph) else dict(expect)
        if json.dumps(wanted, sort_keys=True) != json.dumps(header["graph"], sort_keys=True):
            raise VersionError(f"{path}: graph definition does not match the expected graph")

    graph = ModelGraph.from_description(header["graph"])
    params: dict[int, dict[str, np.ndarray]] = {}
    blobs = body[start:]
    for entry in header["params"]:
        lo, hi = entry["offset"], entry["offset"] + entry["nbytes"]
        if hi > len(blobs):
            raise ModelFileError(f"{path}: parameter blob past end of file")
        dtype = np.dtype(entry["dtype"])
        count = entry["nbytes"] // dtype.itemsize
        if count != int(np.prod(entry["shape"])):
            raise ShapeError(f"{entry['layer']}", f"blob size does not match shape {entry['shape']}")
        value = np.frombuffer(blobs[lo:hi], dtype=dtype).reshape(entry["shape"])
        params.setdefault(int(entry["layer"]), {})[entry["name"]] = value.astype(
            dtype.newbyteorder("="), copy=True
        )
    graph.load_params(params)
    return graph, header.get("metadata", {})
