"""Feature files and manifests"""

import json

import numpy as np
import pytest

from sigvc.dsp.feature_io import load_mel, read_feature_file, save_mel, write_feature_file
from sigvc.dsp.manifest import ManifestEntry, group_by_speaker, load_corpus, load_manifest, write_manifest
from sigvc.errors import ConfigValidationError, EmptyInputError, FeatureIOError

from conftest import mel_with_frames


def test_matrix_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    matrix = rng.standard_normal((37, 80)).astype(np.float32)
    path = write_feature_file(tmp_path / "feat", matrix, {'kind': 'content', 'frame_rate': 62.5})
    values, meta = read_feature_file(path)
    assert values.dtype == np.float32
    assert values.tobytes() == matrix.tobytes()
    assert meta['num_frames'] == 37 and meta['num_bins'] == 80
    assert meta['kind'] == 'content'


def test_mel_round_trip_keeps_metadata(tmp_path):
    mel = mel_with_frames(20, utterance_id="spk00_001")
    path = save_mel(tmp_path / "spk00_001.mel", mel)
    assert path.name == "spk00_001.mel.f32"
    assert (tmp_path / "spk00_001.mel.json").exists()

    loaded = load_mel(path)
    assert np.array_equal(loaded.values, mel.values)
    assert loaded.utterance_id == "spk00_001"
    assert (loaded.hop_length, loaded.win_length, loaded.sample_rate) == (256, 1024, 16000)


def test_vectors_are_stored_as_one_row(tmp_path):
    path = write_feature_file(tmp_path / "emb.spk", np.arange(192, dtype=np.float32))
    values, meta = read_feature_file(path)
    assert values.shape == (1, 192)
    assert meta['num_frames'] == 1


def test_truncated_file_is_rejected(tmp_path):
    path = write_feature_file(tmp_path / "feat", np.ones((4, 4), dtype=np.float32))
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(FeatureIOError):
        read_feature_file(path)


def test_manifest_paths_resolve_relative_to_manifest(tmp_path):
    entries = [
        ManifestEntry(utterance_id="a1", speaker_id="a", wav_path="a/a1.wav", gender="F"),
        ManifestEntry(utterance_id="b1", speaker_id="b", wav_path="b/b1.wav"),
        ManifestEntry(utterance_id="a2", speaker_id="a", wav_path="a/a2.wav"),
    ]
    path = write_manifest(tmp_path / "corpus" / "manifest.json", entries)
    loaded = load_manifest(path)
    assert loaded[0].wav_path == str((tmp_path / "corpus" / "a" / "a1.wav").resolve())
    assert list(group_by_speaker(loaded)) == ["a", "b"]
    assert [e.utterance_id for e in group_by_speaker(loaded)["a"]] == ["a1", "a2"]


def test_manifest_rejects_unknown_keys_and_empty(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([{"utterance_id": "x", "speaker_id": "s", "wav_path": "x.wav", "lang": "en"}]))
    with pytest.raises(ConfigValidationError):
        load_manifest(bad)

    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    with pytest.raises(EmptyInputError):
        load_manifest(empty)
    assert load_manifest(empty, allow_empty=True) == []


def test_corpus_directory_layout(tmp_path):
    import soundfile as sf

    for spk in ("bob", "amy"):
        (tmp_path / spk).mkdir()
        for k in range(2):
            sf.write(str(tmp_path / spk / f"{k}.wav"), np.zeros(512), 16000)
    entries = load_corpus(tmp_path)
    assert [e.utterance_id for e in entries] == ["amy_0", "amy_1", "bob_0", "bob_1"]
    assert {e.speaker_id for e in entries} == {"amy", "bob"}
