"""
Zero-shot conversion service.

    mel_src  = Mel(trim(load(source)))
    mid      = remove(content(mel_src), spk(mel_src))
    mel_out  = postnet(add(mid, mean(spk(target_refs))))
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

from sigvc.config import RunConfig
from sigvc.dsp.feature_io import save_mel
from sigvc.dsp.features import MelSpectrogram, Waveform, wav_to_mel, write_wav
from sigvc.encoders.base import SpeakerEmbedding, average_speaker_embedding, require_frames
from sigvc.encoders.registry import EncoderPair, load_encoder_pair
from sigvc.errors import ConfigValidationError
from sigvc.inference.vocoder import vocode_external, vocode_griffin_lim
from sigvc.model.checkpoint import CheckpointManifest, load_checkpoint
from sigvc.model.sigvc_model import SIGVCModel

logger = logging.getLogger(__name__)

VOCODERS = ("griffin_lim", "external", "none")

PathLike = Union[str, Path]


@dataclass
class ConversionRequest:
    source_wav: Path
    target_reference_wavs: List[Path]
    output: Path
    checkpoint: Optional[Path] = None
    vocoder: str = "griffin_lim"

    def __post_init__(self):
        self.source_wav = Path(self.source_wav)
        self.target_reference_wavs = [Path(p) for p in self.target_reference_wavs]
        self.output = Path(self.output)
        if self.checkpoint is not None:
            self.checkpoint = Path(self.checkpoint)
        if not self.target_reference_wavs:
            raise ConfigValidationError("Conversion needs at least one target reference", key="target")
        if self.vocoder not in VOCODERS:
            raise ConfigValidationError(f"Unknown vocoder {self.vocoder!r}; choose one of {VOCODERS}", key="vocoder")


@dataclass(eq=False)
class ConversionResult:
    mel: MelSpectrogram
    source_embedding: SpeakerEmbedding
    target_embedding: SpeakerEmbedding
    feature_path: Optional[Path] = None
    waveform: Optional[Waveform] = None
    wav_path: Optional[Path] = None
    extras: dict = field(default_factory=dict)


def output_paths(output: PathLike):
    """(<stem>.mel feature stem, <stem>.wav) for an --out path with or without suffix"""
    output = Path(output)
    stem = output.with_suffix("") if output.suffix in (".wav", ".f32", ".json") else output
    return stem.with_name(stem.name + ".mel"), stem.with_name(stem.name + ".wav")


class VoiceConverter:
    """A loaded SIG-VC model plus its encoders; safe to share for read-only conversion"""

    def __init__(
        self,
        config: RunConfig,
        model: SIGVCModel,
        encoders: EncoderPair,
        manifest: Optional[CheckpointManifest] = None,
    ):
        self.config = config
        self.model = model
        self.encoders = encoders
        self.manifest = manifest

    @classmethod
    def from_checkpoint(
        cls,
        checkpoint: PathLike,
        config: RunConfig,
        encoders: Optional[EncoderPair] = None,
    ) -> "VoiceConverter":
        model, manifest, _ = load_checkpoint(checkpoint, config)
        return cls(config, model, encoders or load_encoder_pair(config.encoders), manifest)

    def load_mel(self, path: PathLike, trim: Optional[bool] = None) -> MelSpectrogram:
        if trim is None:
            trim = self.config.inference.trim_source
        return wav_to_mel(path, self.config.dsp, trim=trim)

    def speaker_embedding(self, mel: MelSpectrogram) -> SpeakerEmbedding:
        return self.encoders.speaker.extract_speaker_embedding(mel)

    def target_embedding(self, references: Sequence[MelSpectrogram]) -> SpeakerEmbedding:
        return average_speaker_embedding([self.speaker_embedding(m) for m in references])

    def convert_mel(self, mel_src: MelSpectrogram, target: SpeakerEmbedding) -> ConversionResult:
        """Remove with the source embedding, add with the target embedding"""
        require_frames(mel_src, 2, "Conversion source")
        content = self.encoders.content.extract_content(mel_src)
        spk_src = self.speaker_embedding(mel_src)
        mid = self.model.remove_speaker_info(content, spk_src)
        mel_out = self.model.postnet_refine(self.model.add_speaker_info(mid, target))
        mel_out.utterance_id = mel_src.utterance_id
        return ConversionResult(mel=mel_out, source_embedding=spk_src, target_embedding=target)

    def convert(self, req: ConversionRequest) -> ConversionResult:
        mel_src = self.load_mel(req.source_wav)
        references = [self.load_mel(p) for p in req.target_reference_wavs]
        result = self.convert_mel(mel_src, self.target_embedding(references))

        feature_stem, wav_path = output_paths(req.output)
        sidecar = {
            'source': str(req.source_wav),
            'targets': [str(p) for p in req.target_reference_wavs],
            'checkpoint_step': self.manifest.step if self.manifest else None,
        }
        result.mel.utterance_id = req.output.stem
        result.feature_path = save_mel(feature_stem, result.mel, extra=sidecar)

        if req.vocoder == "griffin_lim":
            result.waveform = vocode_griffin_lim(
                result.mel, self.config.inference.griffin_lim_iterations, self.config.dsp
            )
            result.wav_path = write_wav(wav_path, result.waveform)
        elif req.vocoder == "external":
            result.wav_path = vocode_external(result.feature_path, wav_path, self.config.inference.vocoder_command)

        logger.info("✓ Converted %s -> %s (%d frames)", req.source_wav.name, result.feature_path, result.mel.num_frames)
        return result

    def convert_many(self, requests: Sequence[ConversionRequest], num_workers: Optional[int] = None) -> List[ConversionResult]:
        """Independent requests in a thread pool; results keep request order"""
        workers = num_workers or self.config.inference.num_workers
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.convert, requests))


def convert(req: ConversionRequest, config: RunConfig, encoders: Optional[EncoderPair] = None) -> ConversionResult:
    """One-shot conversion: load the checkpoint named in the request and run it"""
    if req.checkpoint is None:
        raise ConfigValidationError("Conversion request has no checkpoint", key="checkpoint")
    return VoiceConverter.from_checkpoint(req.checkpoint, config, encoders).convert(req)
