"""
Toy stand-ins for the pre-trained content (ASR bottleneck) and speaker
(verification) encoders.

Both are small Keras convolutional stacks, trained once in toy pre-training
and then frozen. Frozen encoders still pass gradients to their input, which
is what lets the intermediate speaker loss reach the SI remover.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import tensorflow as tf

from sigvc.dsp.features import MelSpectrogram
from sigvc.encoders.base import (
    ContentFeature,
    EmbeddingSource,
    SpeakerEmbedding,
    require_frames,
)
from sigvc.errors import ConfigMismatchError, EncoderUnavailableError, ShapeError
from sigvc.utils.runtime import weights_checksum

logger = logging.getLogger(__name__)

STATS_EPSILON = 1e-6


def _full_mask(x: tf.Tensor) -> tf.Tensor:
    return tf.ones(tf.shape(x)[:2], dtype=x.dtype)


def masked_mean(x: tf.Tensor, mask: tf.Tensor) -> tf.Tensor:
    """Mean over time of B x T x C using a B x T frame mask"""
    m = tf.cast(mask, x.dtype)[..., None]
    return tf.reduce_sum(x * m, axis=1) / tf.maximum(tf.reduce_sum(m, axis=1), 1.0)


def statistics_pooling(x: tf.Tensor, mask: tf.Tensor) -> tf.Tensor:
    """Concatenated masked mean and standard deviation over time"""
    m = tf.cast(mask, x.dtype)[..., None]
    mean = masked_mean(x, mask)
    var = tf.reduce_sum(tf.square(x - mean[:, None, :]) * m, axis=1) / tf.maximum(tf.reduce_sum(m, axis=1), 1.0)
    std = tf.sqrt(var + STATS_EPSILON)
    return tf.concat([mean, std], axis=-1)


class ToyContentEncoder(tf.keras.Model):
    """
    Conv stack -> linear bottleneck. Utterance-level mean normalisation
    strips the stationary (channel / timbre) part before the convolutions.
    """

    kind = "toy_content"

    def __init__(self, output_dim: int = 64, channels: int = 128, n_mels: int = 80, **kwargs):
        super().__init__(**kwargs)
        self.output_dim = output_dim
        self.channels = channels
        self.n_mels = n_mels
        self.convs = [
            tf.keras.layers.Conv1D(channels, 5, padding="same", activation="relu", name=f"conv{i}")
            for i in range(3)
        ]
        self.bottleneck = tf.keras.layers.Dense(output_dim, name="bottleneck")

    def call(self, mel, frame_mask=None, training=False):
        mask = _full_mask(mel) if frame_mask is None else frame_mask
        m = tf.cast(mask, mel.dtype)[..., None]
        h = (mel - masked_mean(mel, mask)[:, None, :]) * m
        # Re-mask after each conv so padded frames never reach real ones
        for conv in self.convs:
            h = conv(h) * m
        return self.bottleneck(h) * m

    def encode(self, mel: tf.Tensor, mask: Optional[tf.Tensor] = None) -> tf.Tensor:
        return self(mel, frame_mask=mask, training=False)

    def extract_content(self, mel: MelSpectrogram) -> ContentFeature:
        _check_bins(mel, self.n_mels)
        values = self(mel.values[None], training=False)[0].numpy()
        return ContentFeature(values, frame_rate=mel.sample_rate / mel.hop_length)

    def architecture(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'output_dim': self.output_dim, 'channels': self.channels, 'n_mels': self.n_mels}


class ToySpeakerEncoder(tf.keras.Model):
    """Dilated conv stack -> mean/std statistics pooling -> linear projection"""

    kind = "toy_speaker"

    def __init__(self, output_dim: int = 192, channels: int = 128, n_mels: int = 80, **kwargs):
        super().__init__(**kwargs)
        self.output_dim = output_dim
        self.channels = channels
        self.n_mels = n_mels
        self.convs = [
            tf.keras.layers.Conv1D(channels, 5, padding="same", activation="relu", name="conv0"),
            tf.keras.layers.Conv1D(channels, 3, padding="same", dilation_rate=2, activation="relu", name="conv1"),
            tf.keras.layers.Conv1D(channels, 3, padding="same", dilation_rate=3, activation="relu", name="conv2"),
        ]
        self.projection = tf.keras.layers.Dense(output_dim, name="projection")

    def call(self, mel, frame_mask=None, training=False):
        mask = _full_mask(mel) if frame_mask is None else frame_mask
        m = tf.cast(mask, mel.dtype)[..., None]
        h = mel * m
        for conv in self.convs:
            h = conv(h) * m
        return self.projection(statistics_pooling(h, mask))

    def encode(self, mel: tf.Tensor, mask: Optional[tf.Tensor] = None) -> tf.Tensor:
        return self(mel, frame_mask=mask, training=False)

    def extract_speaker_embedding(
        self,
        mel: MelSpectrogram,
        source: EmbeddingSource = EmbeddingSource.REFERENCE_AUDIO,
    ) -> SpeakerEmbedding:
        # Standard deviation pooling is meaningless on a single frame
        require_frames(mel, 2, "Speaker embedding extraction")
        _check_bins(mel, self.n_mels)
        values = self(mel.values[None], training=False)[0].numpy()
        return SpeakerEmbedding(values, source=source)

    def architecture(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'output_dim': self.output_dim, 'channels': self.channels, 'n_mels': self.n_mels}


ToyEncoder = Union[ToyContentEncoder, ToySpeakerEncoder]


def _check_bins(mel: MelSpectrogram, n_mels: int) -> None:
    if mel.num_bins != n_mels:
        raise ShapeError(f"Encoder expects {n_mels} Mel bins, got {mel.num_bins}")


def build_encoder(encoder: ToyEncoder) -> ToyEncoder:
    """Create variables with a dummy 2-frame forward"""
    encoder(np.zeros((1, 2, encoder.n_mels), dtype=np.float32))
    return encoder


def freeze(encoder: ToyEncoder) -> ToyEncoder:
    encoder.trainable = False
    return encoder


def parameter_checksum(encoder: ToyEncoder) -> str:
    return weights_checksum(encoder.get_weights())


def _encoder_paths(path: Union[str, Path]) -> Tuple[Path, Path]:
    path = Path(path)
    name = path.name
    for suffix in (".weights.h5", ".json"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    stem = path.with_name(name)
    return stem.with_name(name + ".weights.h5"), stem.with_name(name + ".json")


def save_encoder(encoder: ToyEncoder, path: Union[str, Path], extra: Optional[Dict[str, Any]] = None) -> Path:
    weights_path, manifest_path = _encoder_paths(path)
    weights_path.parent.mkdir(parents=True, exist_ok=True)
    encoder.save_weights(str(weights_path))
    manifest = {**encoder.architecture(), 'checksum': parameter_checksum(encoder), **(extra or {})}
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return weights_path


def load_encoder(path: Union[str, Path], expected_dim: Optional[int] = None) -> ToyEncoder:
    """Rebuild a toy encoder from its manifest and weights; returned frozen"""
    weights_path, manifest_path = _encoder_paths(path)
    if not weights_path.exists() or not manifest_path.exists():
        raise EncoderUnavailableError(f"No toy encoder checkpoint at {weights_path}")

    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    cls = {ToyContentEncoder.kind: ToyContentEncoder, ToySpeakerEncoder.kind: ToySpeakerEncoder}.get(manifest.get('kind'))
    if cls is None:
        raise EncoderUnavailableError(f"Unknown encoder kind {manifest.get('kind')!r} in {manifest_path}")
    if expected_dim is not None and manifest['output_dim'] != expected_dim:
        raise ConfigMismatchError(
            f"{manifest_path} has output_dim {manifest['output_dim']}, config expects {expected_dim}"
        )

    encoder = build_encoder(cls(
        output_dim=manifest['output_dim'], channels=manifest['channels'], n_mels=manifest['n_mels']
    ))
    encoder.load_weights(str(weights_path))
    logger.info("✓ Loaded %s encoder from %s", manifest['kind'], weights_path)
    return freeze(encoder)
