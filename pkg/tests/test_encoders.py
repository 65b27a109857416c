"""Encoder adapters, toy encoders and pre-training"""

import numpy as np
import pytest

from sigvc.dsp.feature_io import write_feature_file
from sigvc.dsp.features import MelSpectrogram, wav_to_mel
from sigvc.encoders.base import (
    ContentEncoder,
    EmbeddingSource,
    SpeakerEmbedding,
    SpeakerEncoder,
    align_to_mel_frames,
    average_speaker_embedding,
)
from sigvc.encoders.external import ExternalContentEncoder, ExternalSpeakerEncoder
from sigvc.encoders.pretrain import frame_labels
from sigvc.encoders.registry import EncoderPair
from sigvc.encoders.toy_encoders import load_encoder, parameter_checksum, save_encoder
from sigvc.errors import DimensionMismatchError, EmptyInputError, EncoderUnavailableError, TooShortError
from sigvc.evaluation.similarity import cosine_similarity

from conftest import mel_with_frames


def test_content_shapes(encoder_pair):
    for frames in (63, 2):
        content = encoder_pair.content.extract_content(mel_with_frames(frames))
        assert content.values.shape == (frames, 64)


def test_speaker_embedding_shape_and_determinism(encoder_pair):
    mel = mel_with_frames(63)
    first = encoder_pair.speaker.extract_speaker_embedding(mel)
    second = encoder_pair.speaker.extract_speaker_embedding(mel)
    assert first.dim == 192
    assert np.array_equal(first.values, second.values)
    assert first.source is EmbeddingSource.REFERENCE_AUDIO


def test_speaker_embedding_needs_two_frames(encoder_pair):
    with pytest.raises(TooShortError):
        encoder_pair.speaker.extract_speaker_embedding(MelSpectrogram(np.zeros((1, 80))))


def _padded_pair(short_frames=20, long_frames=40, fill=0.0):
    long = mel_with_frames(long_frames, seed=5).values.astype(np.float32)
    short = mel_with_frames(short_frames, seed=6).values.astype(np.float32)
    batch = np.full((2, long_frames, 80), fill, dtype=np.float32)
    batch[0], batch[1, :short_frames] = long, short
    mask = np.zeros((2, long_frames), dtype=np.float32)
    mask[0], mask[1, :short_frames] = 1.0, 1.0
    return short, batch, mask


@pytest.mark.parametrize("fill", [0.0, 7.5])
def test_padding_does_not_reach_encoder_outputs(encoder_pair, fill):
    short, batch, mask = _padded_pair(fill=fill)

    content = encoder_pair.content.encode(batch, mask).numpy()
    content_alone = encoder_pair.content.encode(short[None]).numpy()
    np.testing.assert_allclose(content[1, :20], content_alone[0], atol=1e-4)
    assert np.all(content[1, 20:] == 0.0)

    spk = encoder_pair.speaker.encode(batch, mask).numpy()
    spk_alone = encoder_pair.speaker.encode(short[None]).numpy()
    np.testing.assert_allclose(spk[1], spk_alone[0], rtol=1e-4, atol=1e-4)


def test_toy_encoders_satisfy_protocols(encoder_pair):
    assert isinstance(encoder_pair.content, ContentEncoder)
    assert isinstance(encoder_pair.speaker, SpeakerEncoder)
    assert encoder_pair.differentiable


def test_loaded_encoders_are_frozen(encoder_pair):
    assert not encoder_pair.content.trainable_variables
    assert not encoder_pair.speaker.trainable_variables


def test_save_load_preserves_checksum(tmp_path, encoder_pair):
    save_encoder(encoder_pair.speaker, tmp_path / "spk")
    reloaded = load_encoder(tmp_path / "spk", expected_dim=192)
    assert parameter_checksum(reloaded) == parameter_checksum(encoder_pair.speaker)


def test_missing_checkpoint_is_unavailable(tmp_path):
    with pytest.raises(EncoderUnavailableError):
        load_encoder(tmp_path / "nothing_here")


def test_toy_speaker_encoder_separates_speakers(encoder_pair, toy_entries):
    embeddings = {}
    for entry in toy_entries:
        emb = encoder_pair.speaker.extract_speaker_embedding(wav_to_mel(entry.wav_path))
        embeddings.setdefault(entry.speaker_id, []).append(emb)

    same, diff = [], []
    speakers = list(embeddings)
    for i, spk in enumerate(speakers):
        utts = embeddings[spk]
        same += [cosine_similarity(a, b) for k, a in enumerate(utts) for b in utts[k + 1:]]
        for other in speakers[i + 1:]:
            diff += [cosine_similarity(a, b) for a in utts for b in embeddings[other]]
    assert np.mean(same) > np.mean(diff)


def test_average_embedding_examples():
    v = SpeakerEmbedding(np.array([0.3, -1.2, 2.0]))
    assert np.array_equal(average_speaker_embedding([v]).values, v.values)

    neg = SpeakerEmbedding(-v.values)
    assert np.allclose(average_speaker_embedding([v, neg]).values, 0.0)

    avg = average_speaker_embedding([SpeakerEmbedding([1.0, 0.0]), SpeakerEmbedding([0.0, 1.0])])
    assert np.allclose(avg.values, [0.5, 0.5])
    assert avg.source is EmbeddingSource.AVERAGE


def test_average_embedding_ignores_order():
    rng = np.random.default_rng(13)
    embs = [SpeakerEmbedding(rng.standard_normal(24)) for _ in range(6)]
    reference = average_speaker_embedding(embs).values
    for _ in range(5):
        shuffled = [embs[i] for i in rng.permutation(len(embs))]
        np.testing.assert_allclose(average_speaker_embedding(shuffled).values, reference, rtol=0, atol=1e-12)


def test_average_embedding_errors():
    with pytest.raises(EmptyInputError):
        average_speaker_embedding([])
    with pytest.raises(DimensionMismatchError):
        average_speaker_embedding([SpeakerEmbedding([1.0, 0.0]), SpeakerEmbedding([1.0, 0.0, 0.0])])


def test_align_ramp_from_100fps_is_exact():
    # Feature value = timestamp in seconds
    ramp = (np.arange(120) / 100.0)[:, None] * np.ones((1, 3))
    aligned = align_to_mel_frames(ramp, 100.0, num_frames=63)
    assert aligned.shape == (63, 3)
    expected = np.arange(63) * 256 / 16000
    assert np.allclose(aligned[:, 0], expected, atol=1e-12)


def test_external_adapters_read_feature_files(tmp_path):
    mel = mel_with_frames(40, utterance_id="u1")
    content = np.tile((np.arange(64) / 100.0)[:, None], (1, 8)).astype(np.float32)
    write_feature_file(tmp_path / "u1.content", content, {'kind': 'content', 'frame_rate': 100.0})
    write_feature_file(tmp_path / "u1.spk", np.ones(8, dtype=np.float32), {'kind': 'speaker'})

    content_encoder = ExternalContentEncoder(tmp_path, output_dim=8)
    feature = content_encoder.extract_content(mel)
    assert feature.values.shape == (40, 8)

    speaker_encoder = ExternalSpeakerEncoder(tmp_path, output_dim=8)
    assert speaker_encoder.extract_speaker_embedding(mel).dim == 8
    assert not EncoderPair(content_encoder, speaker_encoder).differentiable

    with pytest.raises(EncoderUnavailableError):
        speaker_encoder.extract_speaker_embedding(mel_with_frames(40, utterance_id="missing"))


def test_frame_labels_follow_segments():
    segments = [(512, 1024, 3), (1024, 2048, 5)]
    labels = frame_labels(segments, num_frames=10, hop_length=256, offset=0)
    assert labels.tolist() == [0, 0, 3, 3, 5, 5, 5, 5, 0, 0]
    shifted = frame_labels(segments, num_frames=4, hop_length=256, offset=512)
    assert shifted.tolist() == [3, 3, 5, 5]
