"""
File-backed adapters for externally computed encoder outputs.

An external toolkit (an ASR bottleneck extractor, a verification model)
writes one feature file per utterance in the dsp feature-file format:

    <dir>/<utterance_id>.content.f32 (+ .json)   T' x d_c, any frame rate
    <dir>/<utterance_id>.spk.f32     (+ .json)   1 x d_s

Content features at a different frame rate are interpolated onto the Mel
timeline. These adapters are not differentiable, so they serve conversion
and evaluation; training needs a differentiable speaker encoder.
"""

from pathlib import Path
from typing import Optional, Union

from sigvc.dsp.feature_io import read_feature_file
from sigvc.dsp.features import MelSpectrogram
from sigvc.encoders.base import (
    ContentFeature,
    EmbeddingSource,
    SpeakerEmbedding,
    align_to_mel_frames,
    require_frames,
)
from sigvc.errors import DimensionMismatchError, EncoderUnavailableError, FeatureIOError


class _FileBackedEncoder:
    suffix = ""

    def __init__(self, feature_dir: Union[str, Path], output_dim: int):
        self.feature_dir = Path(feature_dir)
        self.output_dim = output_dim
        if not self.feature_dir.is_dir():
            raise EncoderUnavailableError(f"External feature directory {self.feature_dir} does not exist")

    def _read(self, mel: MelSpectrogram):
        if not mel.utterance_id:
            raise EncoderUnavailableError("External encoders need an utterance_id on the Mel-spectrogram")
        path = self.feature_dir / f"{mel.utterance_id}.{self.suffix}.f32"
        try:
            values, meta = read_feature_file(path)
        except FeatureIOError as e:
            raise EncoderUnavailableError(f"No external {self.suffix} features for {mel.utterance_id}: {e}") from e
        if values.shape[1] != self.output_dim:
            raise DimensionMismatchError(
                f"{path} has dimension {values.shape[1]}, config expects {self.output_dim}"
            )
        return values, meta


class ExternalContentEncoder(_FileBackedEncoder):
    suffix = "content"

    def __init__(self, feature_dir: Union[str, Path], output_dim: int, frame_rate: Optional[float] = None):
        super().__init__(feature_dir, output_dim)
        self.frame_rate = frame_rate

    def extract_content(self, mel: MelSpectrogram) -> ContentFeature:
        values, meta = self._read(mel)
        mel_rate = mel.sample_rate / mel.hop_length
        source_rate = float(meta.get('frame_rate') or self.frame_rate or mel_rate)
        if source_rate != mel_rate or values.shape[0] != mel.num_frames:
            values = align_to_mel_frames(values, source_rate, mel.num_frames, mel.hop_length, mel.sample_rate)
        return ContentFeature(values, frame_rate=mel_rate)


class ExternalSpeakerEncoder(_FileBackedEncoder):
    suffix = "spk"

    def extract_speaker_embedding(
        self,
        mel: MelSpectrogram,
        source: EmbeddingSource = EmbeddingSource.REFERENCE_AUDIO,
    ) -> SpeakerEmbedding:
        require_frames(mel, 2, "Speaker embedding extraction")
        values, _ = self._read(mel)
        return SpeakerEmbedding(values[0], source=source)
