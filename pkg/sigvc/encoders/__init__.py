"""Pluggable content / speaker encoders and their toy implementations"""

from .base import (
    ContentEncoder,
    ContentFeature,
    EmbeddingSource,
    SpeakerEmbedding,
    SpeakerEncoder,
    align_to_mel_frames,
    average_speaker_embedding,
)
from .registry import EncoderPair, load_encoder_pair, load_evaluation_encoder
from .toy_encoders import ToyContentEncoder, ToySpeakerEncoder, freeze, parameter_checksum

__all__ = [
    'ContentEncoder',
    'ContentFeature',
    'EmbeddingSource',
    'EncoderPair',
    'SpeakerEmbedding',
    'SpeakerEncoder',
    'ToyContentEncoder',
    'ToySpeakerEncoder',
    'align_to_mel_frames',
    'average_speaker_embedding',
    'freeze',
    'load_encoder_pair',
    'load_evaluation_encoder',
    'parameter_checksum',
]
