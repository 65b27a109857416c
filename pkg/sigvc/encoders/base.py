"""
Encoder adapter contracts and the feature types they produce.

A content encoder maps a Mel-spectrogram to frame-aligned bottleneck
features; a speaker encoder maps it to a fixed-length embedding. Toy Keras
encoders and file-backed external providers both satisfy these protocols.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from scipy.interpolate import interp1d

from sigvc.dsp.features import MelSpectrogram
from sigvc.errors import DimensionMismatchError, EmptyInputError, ShapeError, TooShortError


class EmbeddingSource(Enum):
    REFERENCE_AUDIO = "reference_audio"
    INTERMEDIATE_REPRESENTATION = "intermediate_representation"
    AVERAGE = "average"


@dataclass(eq=False)
class ContentFeature:
    """T x d_c bottleneck features aligned 1:1 with Mel frames"""

    values: np.ndarray
    frame_rate: float = 62.5

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ShapeError(f"Content features must be 2-D, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ShapeError("Content features contain non-finite values")

    @property
    def num_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])


@dataclass(eq=False)
class SpeakerEmbedding:
    values: np.ndarray
    source: EmbeddingSource = EmbeddingSource.REFERENCE_AUDIO

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.values)):
            raise ShapeError("Speaker embedding contains non-finite values")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@runtime_checkable
class ContentEncoder(Protocol):
    output_dim: int

    def extract_content(self, mel: MelSpectrogram) -> ContentFeature:
        ...


@runtime_checkable
class SpeakerEncoder(Protocol):
    output_dim: int

    def extract_speaker_embedding(self, mel: MelSpectrogram) -> SpeakerEmbedding:
        ...


def average_speaker_embedding(embs: Sequence[SpeakerEmbedding]) -> SpeakerEmbedding:
    """Per-dimension arithmetic mean of a set of embeddings"""
    if not embs:
        raise EmptyInputError("Cannot average an empty list of speaker embeddings")
    dims = {e.dim for e in embs}
    if len(dims) != 1:
        raise DimensionMismatchError(f"Speaker embeddings have mixed dimensions {sorted(dims)}")
    mean = np.mean(np.stack([e.values for e in embs]), axis=0)
    return SpeakerEmbedding(mean, source=EmbeddingSource.AVERAGE)


def mel_frame_times(num_frames: int, hop_length: int = 256, sample_rate: int = 16000) -> np.ndarray:
    return np.arange(num_frames) * (hop_length / float(sample_rate))


def align_to_mel_frames(
    values: np.ndarray,
    source_frame_rate: float,
    num_frames: int,
    hop_length: int = 256,
    sample_rate: int = 16000,
) -> np.ndarray:
    """
    Linearly interpolate features sampled at source_frame_rate onto the Mel
    frame timeline (frame k at k * hop / sr seconds).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 1:
        raise ShapeError(f"Expected a non-empty T x d matrix, got {values.shape}")

    target = mel_frame_times(num_frames, hop_length, sample_rate)
    if values.shape[0] == 1:
        return np.repeat(values, num_frames, axis=0)

    source = np.arange(values.shape[0]) / float(source_frame_rate)
    interpolate = interp1d(source, values, axis=0, kind="linear", fill_value="extrapolate", assume_sorted=True)
    return interpolate(target)


def require_frames(mel: MelSpectrogram, minimum: int, what: str) -> None:
    if mel.num_frames < minimum:
        raise TooShortError(f"{what} needs at least {minimum} frames, got {mel.num_frames}")
