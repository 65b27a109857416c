"""
SIG-VC network: speaker information remover and adder around one shared
speaker information manipulator.

    content + s --PreNet1--> manipulator --> intermediate (Mel space)
    intermediate --mel_embedding--> + s --PreNet2--> manipulator --> X_hat
    X_hat --PostNet--> X_hat_postnet

The remover and the adder call the same `SpeakerInfoManipulator` instance;
there is exactly one set of manipulator weights.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import tensorflow as tf

from sigvc.config import RunConfig
from sigvc.dsp.features import MelSpectrogram
from sigvc.encoders.base import (
    ContentFeature,
    EmbeddingSource,
    SpeakerEmbedding,
    require_frames,
)
from sigvc.encoders.registry import EncoderPair
from sigvc.errors import DimensionMismatchError, EncoderUnavailableError, ShapeError
from sigvc.model.layers import FFTBlock, PostNet, PreNet, SinusoidalPositionalEncoding

logger = logging.getLogger(__name__)

# PreNet1 and PreNet2 each consume one seed per dense layer
DROPOUT_SITES = 2 * PreNet.num_dropout_sites


def dropout_seeds(seed: int, step: int) -> np.ndarray:
    """DROPOUT_SITES x 2 stateless seeds for one training step"""
    state = np.random.SeedSequence([int(seed), int(step)]).generate_state(2 * DROPOUT_SITES)
    return state.astype(np.int64).reshape(DROPOUT_SITES, 2)


@dataclass(eq=False)
class IntermediateRepresentation:
    """Remover output: a T x n_mels matrix in Mel space"""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ShapeError(f"Intermediate representation must be 2-D, got {self.values.shape}")

    @property
    def num_frames(self) -> int:
        return int(self.values.shape[0])

    def as_mel(self, like: Optional[MelSpectrogram] = None) -> MelSpectrogram:
        """View as a MelSpectrogram so a speaker encoder can consume it"""
        if like is None:
            return MelSpectrogram(self.values)
        return MelSpectrogram(self.values, like.hop_length, like.win_length, like.sample_rate, like.utterance_id)


@dataclass(eq=False)
class ForwardBundle:
    intermediate: IntermediateRepresentation
    mel_pred: MelSpectrogram
    mel_postnet: MelSpectrogram
    e_mid: SpeakerEmbedding
    s_hat: SpeakerEmbedding
    # Speaker embedding of the input, the target of the feedback loss
    s: Optional[SpeakerEmbedding] = None


class SpeakerInfoManipulator(tf.keras.layers.Layer):
    """FFT encoder stack -> optional FFT decoder stack -> Mel-linear head"""

    def __init__(
        self,
        width: int,
        n_mels: int,
        encoder_layers: int,
        decoder_layers: int,
        heads: int,
        ffn_width: int,
        ffn_kernel: int,
        **kwargs,
    ):
        super().__init__(**kwargs)
        self.positional = SinusoidalPositionalEncoding(width, name="positional")
        self.encoder_blocks = [
            FFTBlock(width, heads, ffn_width, ffn_kernel, name=f"encoder_block{i}")
            for i in range(encoder_layers)
        ]
        self.decoder_blocks = [
            FFTBlock(width, heads, ffn_width, ffn_kernel, name=f"decoder_block{i}")
            for i in range(decoder_layers)
        ]
        self.mel_linear = tf.keras.layers.Dense(n_mels, name="mel_linear")

    @property
    def layout(self) -> str:
        return "fft_encoder_decoder" if self.decoder_blocks else "fft_encoder_only"

    def call(self, x, frame_mask):
        m = tf.cast(frame_mask, x.dtype)[..., None]
        h = self.positional(x) * m
        for block in self.encoder_blocks:
            h = block(h, frame_mask=frame_mask)
        if self.decoder_blocks:
            h = self.positional(h) * m
            for block in self.decoder_blocks:
                h = block(h, frame_mask=frame_mask)
        return self.mel_linear(h)


class SIGVCModel(tf.keras.Model):
    """
    Trainable part of SIG-VC (PreNets, manipulator, Mel embedding, PostNet).

    Tensor methods (`remove`, `add`, `refine`) work on B x T x d batches with
    a B x T frame mask. The *_speaker_info / postnet_refine methods wrap
    them for single utterances.
    """

    def __init__(
        self,
        n_mels: int = 80,
        content_dim: int = 64,
        speaker_dim: int = 192,
        width: int = 256,
        prenet_units: int = 256,
        prenet_dropout: float = 0.2,
        encoder_layers: int = 2,
        decoder_layers: int = 2,
        attention_heads: int = 2,
        ffn_width: int = 1024,
        ffn_kernel: int = 3,
        postnet_layers: int = 5,
        postnet_kernel: int = 5,
        postnet_channels: int = 256,
        sample_rate: int = 16000,
        hop_length: int = 256,
        win_length: int = 1024,
        **kwargs,
    ):
        super().__init__(**kwargs)
        self.n_mels = n_mels
        self.content_dim = content_dim
        self.speaker_dim = speaker_dim
        self.width = width
        self.sample_rate = sample_rate
        self.hop_length = hop_length
        self.win_length = win_length

        self.prenet1 = PreNet(prenet_units, width, prenet_dropout, name="prenet1")
        self.prenet2 = PreNet(prenet_units, width, prenet_dropout, name="prenet2")
        self.mel_embedding = tf.keras.layers.Dense(width, name="mel_embedding")
        self.manipulator = SpeakerInfoManipulator(
            width, n_mels, encoder_layers, decoder_layers,
            attention_heads, ffn_width, ffn_kernel, name="manipulator",
        )
        self.postnet = PostNet(n_mels, postnet_channels, postnet_kernel, postnet_layers, name="postnet")

    # Both paths resolve to the one manipulator
    @property
    def remover_manipulator(self) -> SpeakerInfoManipulator:
        return self.manipulator

    @property
    def adder_manipulator(self) -> SpeakerInfoManipulator:
        return self.manipulator

    # ------------------------------------------------------------------
    # Batched tensor API
    # ------------------------------------------------------------------

    @staticmethod
    def _condition(x, spk):
        """Broadcast the B x d_s embedding to every frame and concatenate"""
        frames = tf.shape(x)[1]
        tiled = tf.tile(tf.cast(spk, x.dtype)[:, None, :], tf.stack([1, frames, 1]))
        return tf.concat([x, tiled], axis=-1)

    def remove(self, content, spk, frame_mask, training=False, dropout_seeds=None):
        seeds = None if dropout_seeds is None else dropout_seeds[:2]
        m = tf.cast(frame_mask, content.dtype)[..., None]
        h = self.prenet1(self._condition(content, spk), training=training, dropout_seeds=seeds) * m
        return self.manipulator(h, frame_mask=frame_mask)

    def add(self, mid, spk, frame_mask, training=False, dropout_seeds=None):
        seeds = None if dropout_seeds is None else dropout_seeds[2:]
        m = tf.cast(frame_mask, mid.dtype)[..., None]
        h = self._condition(self.mel_embedding(mid), spk)
        h = self.prenet2(h, training=training, dropout_seeds=seeds) * m
        return self.manipulator(h, frame_mask=frame_mask)

    def refine(self, mel, frame_mask=None):
        return self.postnet(mel, frame_mask=frame_mask)

    def call(self, inputs, frame_mask=None, training=False, dropout_seeds=None):
        """inputs = (content, spk_remove, spk_add) -> (mid, mel_pred, mel_postnet)"""
        content, spk_remove, spk_add = inputs
        if frame_mask is None:
            frame_mask = tf.ones(tf.shape(content)[:2], dtype=content.dtype)
        mid = self.remove(content, spk_remove, frame_mask, training, dropout_seeds)
        mel_pred = self.add(mid, spk_add, frame_mask, training, dropout_seeds)
        return mid, mel_pred, self.refine(mel_pred, frame_mask)

    # ------------------------------------------------------------------
    # Single-utterance API
    # ------------------------------------------------------------------

    def _check_speaker(self, spk: SpeakerEmbedding) -> np.ndarray:
        if spk.dim != self.speaker_dim:
            raise DimensionMismatchError(f"Speaker embedding has dim {spk.dim}, model expects {self.speaker_dim}")
        return spk.values.astype(np.float32)[None]

    def _mel(self, values: np.ndarray, utterance_id: Optional[str] = None) -> MelSpectrogram:
        return MelSpectrogram(values, self.hop_length, self.win_length, self.sample_rate, utterance_id)

    def remove_speaker_info(self, content: ContentFeature, spk: SpeakerEmbedding) -> IntermediateRepresentation:
        if content.dim != self.content_dim:
            raise DimensionMismatchError(f"Content features have dim {content.dim}, model expects {self.content_dim}")
        s = self._check_speaker(spk)
        x = tf.constant(content.values[None])
        mid = self.remove(x, s, tf.ones((1, content.num_frames)), training=False)
        return IntermediateRepresentation(mid[0].numpy())

    def add_speaker_info(self, mid: IntermediateRepresentation, spk: SpeakerEmbedding) -> MelSpectrogram:
        if mid.values.shape[1] != self.n_mels:
            raise DimensionMismatchError(f"Intermediate has {mid.values.shape[1]} bins, model expects {self.n_mels}")
        s = self._check_speaker(spk)
        x = tf.constant(mid.values[None])
        mel = self.add(x, s, tf.ones((1, mid.num_frames)), training=False)
        return self._mel(mel[0].numpy())

    def postnet_refine(self, mel: MelSpectrogram) -> MelSpectrogram:
        if mel.num_bins != self.n_mels:
            raise ShapeError(f"PostNet expects {self.n_mels} bins, got {mel.num_bins}")
        out = self.refine(tf.constant(mel.values[None]))
        return self._mel(out[0].numpy(), mel.utterance_id)

    def architecture(self) -> Dict[str, object]:
        return {
            'n_mels': self.n_mels,
            'd_c': self.content_dim,
            'd_s': self.speaker_dim,
            'width': self.width,
            'manipulator_layout': self.manipulator.layout,
        }


def build_model(config: RunConfig) -> SIGVCModel:
    """Instantiate from a run config and create every variable"""
    m = config.model
    model = SIGVCModel(
        n_mels=config.dsp.n_mels,
        content_dim=config.encoders.content_dim,
        speaker_dim=config.encoders.speaker_dim,
        width=m.width,
        prenet_units=m.prenet_units,
        prenet_dropout=m.prenet_dropout,
        encoder_layers=m.encoder_layers,
        decoder_layers=m.decoder_layers,
        attention_heads=m.attention_heads,
        ffn_width=m.ffn_width,
        ffn_kernel=m.ffn_kernel,
        postnet_layers=m.postnet_layers,
        postnet_kernel=m.postnet_kernel,
        postnet_channels=m.postnet_channels,
        sample_rate=config.dsp.sample_rate,
        hop_length=config.dsp.hop_length,
        win_length=config.dsp.win_length,
        name="sigvc",
    )
    content = np.zeros((1, 2, config.encoders.content_dim), dtype=np.float32)
    spk = np.zeros((1, config.encoders.speaker_dim), dtype=np.float32)
    model((content, spk, spk))
    logger.debug("Built SIG-VC model with %d parameters", model.count_params())
    return model


# ============================================================================
# Forward passes with encoders in the loop
# ============================================================================

def forward_batch(
    model: SIGVCModel,
    encoders: EncoderPair,
    mel: tf.Tensor,
    frame_mask: tf.Tensor,
    training: bool = False,
    dropout_seeds=None,
) -> Dict[str, tf.Tensor]:
    """
    Masked batched training forward.

    Speaker embeddings come from the input itself; the frozen speaker
    encoder also scores the intermediate and the refined prediction.
    """
    content = encoders.content.encode(mel, frame_mask)
    s = encoders.speaker.encode(mel, frame_mask)
    mid = model.remove(content, s, frame_mask, training, dropout_seeds)
    e_mid = encoders.speaker.encode(mid, frame_mask)
    mel_pred = model.add(mid, s, frame_mask, training, dropout_seeds)
    mel_postnet = model.refine(mel_pred, frame_mask)
    s_hat = encoders.speaker.encode(mel_postnet, frame_mask)
    return {
        'mid': mid,
        'e_mid': e_mid,
        'mel_pred': mel_pred,
        'mel_postnet': mel_postnet,
        's': s,
        's_hat': s_hat,
    }


def training_forward(model: SIGVCModel, encoders: EncoderPair, mel_in: MelSpectrogram) -> ForwardBundle:
    """Eval-mode training forward on one utterance"""
    if not encoders.differentiable:
        raise EncoderUnavailableError("Training forward needs differentiable (toy) encoders")
    require_frames(mel_in, 2, "Training forward")
    if mel_in.num_bins != model.n_mels:
        raise ShapeError(f"Model expects {model.n_mels} bins, got {mel_in.num_bins}")

    mel = tf.constant(mel_in.values[None])
    out = forward_batch(model, encoders, mel, tf.ones((1, mel_in.num_frames)), training=False)
    uid = mel_in.utterance_id
    return ForwardBundle(
        intermediate=IntermediateRepresentation(out['mid'][0].numpy()),
        mel_pred=model._mel(out['mel_pred'][0].numpy(), uid),
        mel_postnet=model._mel(out['mel_postnet'][0].numpy(), uid),
        e_mid=SpeakerEmbedding(out['e_mid'][0].numpy(), EmbeddingSource.INTERMEDIATE_REPRESENTATION),
        s_hat=SpeakerEmbedding(out['s_hat'][0].numpy()),
        s=SpeakerEmbedding(out['s'][0].numpy()),
    )
