"""
Feature files: little-endian float32, row-major, with a JSON sidecar.

    <stem>.f32   raw matrix bytes
    <stem>.json  {"num_frames", "num_bins", "sample_rate", "hop_length",
                  "win_length", "kind", ...}

Vectors (speaker embeddings) are stored as a single row.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from sigvc.dsp.features import MelSpectrogram
from sigvc.errors import FeatureIOError

_DTYPE = np.dtype("<f4")

PathLike = Union[str, Path]


def _paths(path: PathLike) -> Tuple[Path, Path]:
    path = Path(path)
    name = path.name
    for suffix in (".f32", ".json"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return path.with_name(name + ".f32"), path.with_name(name + ".json")


def write_feature_file(path: PathLike, matrix: np.ndarray, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """Write a float32 matrix plus sidecar; returns the .f32 path"""
    data_path, meta_path = _paths(path)
    matrix = np.asarray(matrix)
    if matrix.ndim == 1:
        matrix = matrix[None, :]
    if matrix.ndim != 2:
        raise FeatureIOError(f"Feature files hold 2-D matrices, got shape {matrix.shape}")

    meta = dict(metadata or {})
    meta['num_frames'] = int(matrix.shape[0])
    meta['num_bins'] = int(matrix.shape[1])

    try:
        data_path.parent.mkdir(parents=True, exist_ok=True)
        data_path.write_bytes(np.ascontiguousarray(matrix, dtype=_DTYPE).tobytes(order="C"))
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    except OSError as e:
        raise FeatureIOError(f"Cannot write feature file {data_path}: {e}") from e
    return data_path


def read_feature_file(path: PathLike) -> Tuple[np.ndarray, Dict[str, Any]]:
    data_path, meta_path = _paths(path)
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        raw = data_path.read_bytes()
    except (OSError, json.JSONDecodeError) as e:
        raise FeatureIOError(f"Cannot read feature file {data_path}: {e}") from e

    rows, cols = int(meta['num_frames']), int(meta['num_bins'])
    if len(raw) != rows * cols * _DTYPE.itemsize:
        raise FeatureIOError(
            f"{data_path} holds {len(raw)} bytes, sidecar promises {rows}x{cols} float32"
        )
    matrix = np.frombuffer(raw, dtype=_DTYPE).reshape(rows, cols).astype(np.float32)
    return matrix, meta


def save_mel(path: PathLike, mel: MelSpectrogram, extra: Optional[Dict[str, Any]] = None) -> Path:
    meta = {**(extra or {}), **mel.metadata()}
    meta['kind'] = 'mel'
    if mel.utterance_id:
        meta['utterance_id'] = mel.utterance_id
    return write_feature_file(path, mel.values, meta)


def load_mel(path: PathLike) -> MelSpectrogram:
    values, meta = read_feature_file(path)
    return MelSpectrogram(
        values=values,
        hop_length=int(meta.get('hop_length', 256)),
        win_length=int(meta.get('win_length', 1024)),
        sample_rate=int(meta.get('sample_rate', 16000)),
        utterance_id=meta.get('utterance_id'),
    )
