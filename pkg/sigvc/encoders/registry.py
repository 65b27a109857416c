"""
Adapter discovery: turn {type, checkpoint_path} specs into encoders.
"""

from dataclasses import dataclass
from typing import Optional

from sigvc.config import EncoderSpec, EncodersConfig
from sigvc.encoders.base import ContentEncoder, SpeakerEncoder
from sigvc.encoders.external import ExternalContentEncoder, ExternalSpeakerEncoder
from sigvc.encoders.toy_encoders import ToyContentEncoder, ToySpeakerEncoder, load_encoder
from sigvc.errors import EncoderUnavailableError


@dataclass
class EncoderPair:
    """The two frozen encoders the SIG-VC network is trained and run against"""

    content: ContentEncoder
    speaker: SpeakerEncoder

    @property
    def differentiable(self) -> bool:
        return isinstance(self.speaker, ToySpeakerEncoder) and isinstance(self.content, ToyContentEncoder)


def _require_path(spec: EncoderSpec, role: str) -> str:
    if not spec.checkpoint_path:
        raise EncoderUnavailableError(
            f"{role} encoder of type '{spec.type}' needs checkpoint_path "
            "(run pretrain-encoders for toy encoders)"
        )
    return spec.checkpoint_path


def load_content_encoder(spec: EncoderSpec, config: EncodersConfig) -> ContentEncoder:
    path = _require_path(spec, "content")
    if spec.type == "external":
        return ExternalContentEncoder(path, config.content_dim, spec.frame_rate)
    encoder = load_encoder(path, expected_dim=config.content_dim)
    if not isinstance(encoder, ToyContentEncoder):
        raise EncoderUnavailableError(f"{path} is not a content encoder")
    return encoder


def load_speaker_encoder(spec: EncoderSpec, config: EncodersConfig, role: str = "speaker") -> SpeakerEncoder:
    path = _require_path(spec, role)
    if spec.type == "external":
        return ExternalSpeakerEncoder(path, config.speaker_dim)
    encoder = load_encoder(path, expected_dim=config.speaker_dim)
    if not isinstance(encoder, ToySpeakerEncoder):
        raise EncoderUnavailableError(f"{path} is not a speaker encoder")
    return encoder


def load_encoder_pair(config: EncodersConfig) -> EncoderPair:
    return EncoderPair(
        content=load_content_encoder(config.content, config),
        speaker=load_speaker_encoder(config.speaker, config),
    )


def load_evaluation_encoder(config: EncodersConfig) -> Optional[SpeakerEncoder]:
    if config.evaluation_speaker is None:
        return None
    return load_speaker_encoder(config.evaluation_speaker, config, role="evaluation_speaker")
