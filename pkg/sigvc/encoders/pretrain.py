"""
Toy pre-training of the bundled encoders.

The content encoder learns frame-level phone classification from the
alignments the toy corpus writes into its manifest; the speaker encoders
learn utterance-level speaker classification. Classification heads are
discarded afterwards and the encoders are saved frozen.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import tensorflow as tf

from sigvc.config import DSPConfig, EncoderSpec, EncodersConfig
from sigvc.dsp.features import MelSpectrogram, load_and_resample, mel_spectrogram, trim_silence
from sigvc.dsp.manifest import ManifestEntry
from sigvc.dsp.toy_corpus import NUM_PHONE_CLASSES
from sigvc.encoders.toy_encoders import (
    ToyContentEncoder,
    ToySpeakerEncoder,
    build_encoder,
    freeze,
    save_encoder,
)
from sigvc.errors import EmptyInputError, EncoderUnavailableError
from sigvc.utils.batching import pad_batch
from sigvc.utils.runtime import seed_everything

logger = logging.getLogger(__name__)


@dataclass
class LabelledUtterance:
    mel: MelSpectrogram
    speaker_index: int
    frame_labels: Optional[np.ndarray]


def frame_labels(segments, num_frames: int, hop_length: int, offset: int) -> np.ndarray:
    """Phone id at each Mel frame centre (0 = silence)"""
    centres = np.arange(num_frames) * hop_length + offset
    labels = np.zeros(num_frames, dtype=np.int32)
    for start, end, phone in segments:
        labels[(centres >= start) & (centres < end)] = phone
    return labels


def prepare_utterances(entries: List[ManifestEntry], config: DSPConfig) -> Tuple[List[LabelledUtterance], List[str]]:
    if not entries:
        raise EmptyInputError("Encoder pre-training needs at least one utterance")
    speakers = sorted({e.speaker_id for e in entries})
    index = {s: i for i, s in enumerate(speakers)}

    items = []
    for entry in entries:
        w = trim_silence(load_and_resample(entry.wav_path, config), config.trim_threshold_db, config)
        mel = mel_spectrogram(w, config)
        mel.utterance_id = entry.utterance_id
        labels = None
        if entry.phones is not None:
            labels = frame_labels(entry.phones, mel.num_frames, config.hop_length, w.trim_offset)
        items.append(LabelledUtterance(mel, index[entry.speaker_id], labels))
    return items, speakers


def _crop(rng: np.random.Generator, length: int, crop: int) -> slice:
    if length <= crop:
        return slice(0, length)
    start = int(rng.integers(0, length - crop + 1))
    return slice(start, start + crop)


def _sample_batch(rng, items, batch_size, crop, pad_value):
    picks = rng.integers(0, len(items), size=batch_size)
    mels, labels, speakers = [], [], []
    for i in picks:
        item = items[int(i)]
        window = _crop(rng, item.mel.num_frames, crop)
        mels.append(item.mel.values[window])
        speakers.append(item.speaker_index)
        if item.frame_labels is not None:
            labels.append(item.frame_labels[window])
    batch, mask = pad_batch(mels, pad_value)
    label_batch = None
    if labels:
        label_batch = np.zeros(mask.shape, dtype=np.int32)
        for b, lab in enumerate(labels):
            label_batch[b, : len(lab)] = lab
    return batch, mask, np.asarray(speakers, dtype=np.int32), label_batch


def pretrain_speaker_encoder(
    items: List[LabelledUtterance],
    num_speakers: int,
    spec: EncoderSpec,
    encoders_config: EncodersConfig,
    dsp_config: DSPConfig,
) -> ToySpeakerEncoder:
    seed_everything(spec.seed)
    rng = np.random.default_rng(spec.seed)
    encoder = build_encoder(ToySpeakerEncoder(encoders_config.speaker_dim, spec.channels, dsp_config.n_mels))
    head = tf.keras.layers.Dense(num_speakers, name="speaker_logits")
    optimizer = tf.keras.optimizers.Adam(encoders_config.pretrain_learning_rate)
    loss_fn = tf.keras.losses.SparseCategoricalCrossentropy(from_logits=True)
    pad_value = float(np.log(dsp_config.log_floor))

    loss = accuracy = float("nan")
    for step in range(1, encoders_config.pretrain_steps + 1):
        batch, mask, speakers, _ = _sample_batch(
            rng, items, encoders_config.pretrain_batch_size, encoders_config.pretrain_crop_frames, pad_value
        )
        with tf.GradientTape() as tape:
            logits = head(tf.nn.relu(encoder(batch, frame_mask=mask, training=True)))
            loss_value = loss_fn(speakers, logits)
        variables = encoder.trainable_variables + head.trainable_variables
        optimizer.apply_gradients(zip(tape.gradient(loss_value, variables), variables))

        loss = float(loss_value)
        accuracy = float(np.mean(np.argmax(logits.numpy(), axis=-1) == speakers))
        if step % 50 == 0:
            logger.info("speaker pretrain step %d: loss=%.4f acc=%.2f", step, loss, accuracy)

    logger.info("✓ Speaker encoder pre-trained (loss=%.4f, batch acc=%.2f)", loss, accuracy)
    return freeze(encoder)


def pretrain_content_encoder(
    items: List[LabelledUtterance],
    spec: EncoderSpec,
    encoders_config: EncodersConfig,
    dsp_config: DSPConfig,
) -> ToyContentEncoder:
    if any(item.frame_labels is None for item in items):
        raise EncoderUnavailableError(
            "Toy content pre-training needs phone alignments in the manifest; "
            "use an external content encoder for unlabelled corpora"
        )
    seed_everything(spec.seed)
    rng = np.random.default_rng(spec.seed)
    encoder = build_encoder(ToyContentEncoder(encoders_config.content_dim, spec.channels, dsp_config.n_mels))
    head = tf.keras.layers.Dense(NUM_PHONE_CLASSES, name="phone_logits")
    optimizer = tf.keras.optimizers.Adam(encoders_config.pretrain_learning_rate)
    loss_fn = tf.keras.losses.SparseCategoricalCrossentropy(from_logits=True)
    pad_value = float(np.log(dsp_config.log_floor))

    loss = accuracy = float("nan")
    for step in range(1, encoders_config.pretrain_steps + 1):
        batch, mask, _, labels = _sample_batch(
            rng, items, encoders_config.pretrain_batch_size, encoders_config.pretrain_crop_frames, pad_value
        )
        with tf.GradientTape() as tape:
            logits = head(encoder(batch, frame_mask=mask, training=True))
            loss_value = loss_fn(labels, logits, sample_weight=mask)
        variables = encoder.trainable_variables + head.trainable_variables
        optimizer.apply_gradients(zip(tape.gradient(loss_value, variables), variables))

        loss = float(loss_value)
        hits = (np.argmax(logits.numpy(), axis=-1) == labels) * mask
        accuracy = float(hits.sum() / mask.sum())
        if step % 50 == 0:
            logger.info("content pretrain step %d: loss=%.4f acc=%.2f", step, loss, accuracy)

    logger.info("✓ Content encoder pre-trained (loss=%.4f, frame acc=%.2f)", loss, accuracy)
    return freeze(encoder)


def pretrain_encoders(
    entries: List[ManifestEntry],
    encoders_config: EncodersConfig,
    dsp_config: DSPConfig,
    out_dir: Union[str, Path],
) -> Dict[str, Path]:
    """Pre-train every toy encoder named in the config; returns role -> weights path"""
    out_dir = Path(out_dir)
    items, speakers = prepare_utterances(entries, dsp_config)
    written: Dict[str, Path] = {}

    if encoders_config.content.type == "toy":
        encoder = pretrain_content_encoder(items, encoders_config.content, encoders_config, dsp_config)
        written['content'] = save_encoder(encoder, out_dir / "content_encoder")

    roles = [('speaker', encoders_config.speaker)]
    if encoders_config.evaluation_speaker is not None:
        roles.append(('evaluation_speaker', encoders_config.evaluation_speaker))
    for role, spec in roles:
        if spec.type != "toy":
            continue
        encoder = pretrain_speaker_encoder(items, len(speakers), spec, encoders_config, dsp_config)
        written[role] = save_encoder(encoder, out_dir / f"{role}_encoder", extra={'speakers': speakers})

    return written
